import inspect
import argparse
from functools import wraps
from typing import (
    Any, Callable, Dict,
    List, Literal, Optional, Union,
    get_type_hints, get_origin, get_args,
)

from lib.errors import UsageError


class CommandParser(argparse.ArgumentParser):
    """Raises UsageError where argparse would print usage and exit with status 2"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


class Command:
    """A CLI subcommand whose options are derived from the function signature.

    Parameter `foo_bar: float = 0.1` becomes `--foo-bar` with type float and
    default 0.1; a parameter without default becomes a required option.
    `flags` renames options (e.g. {"inputs": "--in"}).
    """

    def __init__(
        self,
        func: Callable,
        name: Optional[str] = None,
        description: Optional[str] = None,
        flags: Optional[Dict[str, str]] = None,
    ):
        self.func = func
        self.name = name or func.__name__.replace("_", "-")
        self.description = description or inspect.getdoc(func)
        self.signature = inspect.signature(func, eval_str=True)
        self.type_hints = get_type_hints(func)
        self.flags = flags or {}

        self.parameters = [
            self._build_param_schema(key, param)
            for key, param in self.signature.parameters.items()
        ]

    def _build_param_schema(self, name: str, param: inspect.Parameter) -> dict:
        param_type = self.type_hints.get(name, str)
        schema = self._infer_argument(param_type)
        required = param.default is inspect.Parameter.empty
        if not required and schema.get("action") != "store_true":
            schema["default"] = param.default
        return {
            "name": name,
            "flag": self.flags.get(name, "--" + name.replace("_", "-")),
            "schema": schema,
            "required": required,
        }

    def _infer_argument(self, typ: Any) -> dict:
        origin = get_origin(typ)

        # Literal choices
        if origin is Literal:
            choices = list(get_args(typ))
            return {"type": type(choices[0]), "choices": choices}

        # Optional[T]
        if origin is Union:
            non_none = [arg for arg in get_args(typ) if arg is not type(None)]
            if len(non_none) == 1:
                return self._infer_argument(non_none[0])
            return {"type": str}

        # repeated options
        if origin in (list, List):
            args = get_args(typ)
            inner = self._infer_argument(args[0] if args else str)
            inner["action"] = "append"
            return inner

        if typ is bool:
            return {"action": "store_true"}

        if typ in (int, float, str):
            return {"type": typ}

        return {"type": str}

    def add_to(self, subparsers, parents: Optional[List[argparse.ArgumentParser]] = None) -> argparse.ArgumentParser:
        summary = (self.description or "").split("\n", 1)[0]
        parser = subparsers.add_parser(self.name, help=summary, description=self.description,
                                       parents=parents or [])
        for param in self.parameters:
            parser.add_argument(param["flag"], dest=param["name"], required=param["required"],
                                **param["schema"])
        parser.set_defaults(command=self)
        return parser

    def invoke(self, namespace: argparse.Namespace) -> Any:
        kwargs = {param["name"]: getattr(namespace, param["name"]) for param in self.parameters}
        return self.func(**kwargs)

    def __call__(self, *args, **kwargs):
        return self.func(*args, **kwargs)

    def __repr__(self):
        return f"<Command name={self.name} params={[p['name'] for p in self.parameters]}>"


class CommandRegistry:
    def __init__(self):
        self.commands: Dict[str, Command] = {}

    def register(self, cmd: Command) -> Command:
        if cmd.name in self.commands:
            raise ValueError(f"Command '{cmd.name}' registered twice")
        self.commands[cmd.name] = cmd
        return cmd

    def command(self, func=None, *, name: str = None, description: str = None,
                flags: Optional[Dict[str, str]] = None):
        def wrapper(f):
            cmd = Command(f, name=name, description=description, flags=flags)
            wraps(f)(cmd)
            return self.register(cmd)

        # @command or @command(name="foo")
        return wrapper(func) if func else wrapper

    def parser(self, prog: str, description: Optional[str] = None,
               parents: Optional[List[argparse.ArgumentParser]] = None) -> argparse.ArgumentParser:
        parser = CommandParser(prog=prog, description=description)
        subparsers = parser.add_subparsers(dest="command_name", required=True)
        for cmd in self.commands.values():
            cmd.add_to(subparsers, parents)
        return parser
