from typing import List, Literal, Optional

import pytest

from lib.errors import UsageError
from lib.tooling import Command, CommandRegistry


def sample(inputs: List[str], eps: float = 0.1, mode: Literal["a", "b"] = "a",
           verbose: bool = False, limit: Optional[int] = None):
    """Sample command

    Longer text.
    """
    return inputs, eps, mode, verbose, limit


def test_options_follow_the_signature():
    cmd = Command(sample, flags={"inputs": "--in"})
    params = {p["name"]: p for p in cmd.parameters}
    assert cmd.name == "sample"
    assert params["inputs"]["flag"] == "--in"
    assert params["inputs"]["required"]
    assert params["inputs"]["schema"]["action"] == "append"
    assert params["eps"]["schema"] == {"type": float, "default": 0.1}
    assert params["mode"]["schema"]["choices"] == ["a", "b"]
    assert params["verbose"]["schema"] == {"action": "store_true"}
    assert params["limit"]["schema"] == {"type": int, "default": None}


def test_parse_and_invoke():
    registry = CommandRegistry()
    registry.command(sample, flags={"inputs": "--in"})
    parser = registry.parser("prog")
    args = parser.parse_args(["sample", "--in", "x.json", "--in", "y.json", "--eps", "0.2",
                              "--mode", "b", "--verbose"])
    assert args.command.invoke(args) == (["x.json", "y.json"], 0.2, "b", True, None)


def test_invalid_choice_and_missing_required_exit():
    registry = CommandRegistry()
    registry.command(sample, flags={"inputs": "--in"})
    parser = registry.parser("prog")
    with pytest.raises(UsageError):
        parser.parse_args(["sample", "--in", "x", "--mode", "c"])
    with pytest.raises(UsageError):
        parser.parse_args(["sample"])


def test_decorator_keeps_the_function_callable():
    registry = CommandRegistry()

    @registry.command(name="run-it")
    def run_it_command(count: int = 1):
        """Runs"""
        return count * 2

    assert run_it_command(count=3) == 6
    assert run_it_command.name == "run-it"
    assert run_it_command.description == "Runs"
    assert "run-it" in registry.commands


def test_duplicate_names_are_rejected():
    registry = CommandRegistry()
    registry.command(sample)
    with pytest.raises(ValueError):
        registry.command(sample)
