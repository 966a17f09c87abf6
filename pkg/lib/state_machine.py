from typing import Any, Callable, Dict, List, Optional, Union, TypeVar, Generic, cast, Type, get_type_hints
from dataclasses import dataclass, field
import copy
import inspect
import itertools
import logging
import time


logger = logging.getLogger(__name__)

StateSchema = TypeVar("StateSchema")

_run_counter = itertools.count(1)


@dataclass
class Resource:
    """Read-only inputs shared by every step of a run (indexes, maps, settings)"""
    vars: Dict[str, Any]


class Step(Generic[StateSchema]):
    def __init__(self, step_id: str, logic: Callable[..., Dict]):
        self.step_id = step_id
        self.logic = logic
        self.logic_params_count = self._calculate_params_count()

    def __str__(self) -> str:
        return f"Step('{self.step_id}')"

    def __repr__(self) -> str:
        return self.__str__()

    def _calculate_params_count(self) -> int:
        """Parameters of the logic function, excluding 'self' for bound methods"""
        if inspect.ismethod(self.logic):
            return self.logic.__func__.__code__.co_argcount - 1
        return self.logic.__code__.co_argcount

    def run(self, state: StateSchema, state_schema: Type[StateSchema], resource: Optional[Resource] = None) -> StateSchema:
        if self.logic_params_count == 1:
            result = self.logic(state)
        elif self.logic_params_count == 2:
            result = self.logic(state, resource)
        else:
            raise ValueError(
                f"Step '{self.step_id}' logic function must accept either 1 argument (state) "
                f"or 2 arguments (state, resource). Found {self.logic_params_count} arguments."
            )
        expected_fields = get_type_hints(state_schema)
        updated = {**state}
        for name, value in result.items():
            if name in expected_fields:
                updated[name] = value
            else:
                logger.debug("step %s returned unknown field %s", self.step_id, name)
        return cast(StateSchema, updated)


class EntryPoint(Step[StateSchema]):
    """Marks the beginning of a workflow; connect it to the first real step."""
    def __init__(self):
        super().__init__("__entry__", lambda x: {})


class Termination(Step[StateSchema]):
    """Marks the end of a workflow; final steps connect to it."""
    def __init__(self):
        super().__init__("__termination__", lambda x: {})


@dataclass
class Transition(Generic[StateSchema]):
    source: str
    targets: List[str]
    condition: Optional[Callable[[StateSchema], Union[str, Step[StateSchema]]]] = None

    def __str__(self) -> str:
        return f"Transition('{self.source}' -> {self.targets})"

    def __repr__(self) -> str:
        return self.__str__()

    def resolve(self, state: StateSchema) -> List[str]:
        if self.condition is None:
            return self.targets
        result = self.condition(state)
        target = result.step_id if isinstance(result, Step) else result
        if target not in self.targets:
            raise ValueError(f"Condition on '{self.source}' chose undeclared target '{target}'")
        return [target]


@dataclass
class Snapshot(Generic[StateSchema]):
    """State right after a step, with the step's wall time"""
    step_id: str
    state_data: StateSchema
    elapsed: float

    def __str__(self) -> str:
        return f"Snapshot({self.step_id}, {self.elapsed * 1e3:.3f} ms)"

    def __repr__(self) -> str:
        return self.__str__()


@dataclass
class Run(Generic[StateSchema]):
    """One execution of a state machine"""
    run_id: int
    snapshots: List[Snapshot[StateSchema]] = field(default_factory=list)
    completed: bool = False

    def __str__(self) -> str:
        return f"Run({self.run_id}, steps={self.step_ids})"

    def __repr__(self) -> str:
        return self.__str__()

    @classmethod
    def create(cls) -> "Run[StateSchema]":
        return cls(run_id=next(_run_counter))

    @property
    def step_ids(self) -> List[str]:
        return [s.step_id for s in self.snapshots]

    @property
    def elapsed(self) -> float:
        return sum(s.elapsed for s in self.snapshots)

    @property
    def metadata(self) -> Dict:
        return {
            "run_id": self.run_id,
            "steps": self.step_ids,
            "elapsed_seconds": self.elapsed,
            "completed": self.completed,
        }

    def add_snapshot(self, snapshot: Snapshot[StateSchema]):
        self.snapshots.append(snapshot)

    def complete(self):
        self.completed = True

    def get_final_state(self) -> Optional[StateSchema]:
        if not self.snapshots:
            return None
        return self.snapshots[-1].state_data


class StateMachine(Generic[StateSchema]):
    def __init__(self, state_schema: Type[StateSchema], max_steps: int = 1000):
        self.state_schema = state_schema
        self.max_steps = max_steps
        self.steps: Dict[str, Step[StateSchema]] = {}
        self.transitions: Dict[str, List[Transition[StateSchema]]] = {}

    def __str__(self) -> str:
        return f"StateMachine(steps={list(self.steps)})"

    def __repr__(self) -> str:
        return self.__str__()

    def add_steps(self, steps: List[Step[StateSchema]]):
        for step in steps:
            self.steps[step.step_id] = step

    def connect(
        self,
        source: Union[Step[StateSchema], str],
        targets: Union[Step[StateSchema], str, List[Union[Step[StateSchema], str]]],
        condition: Optional[Callable[[StateSchema], Union[str, Step[StateSchema]]]] = None,
    ):
        src_id = source.step_id if isinstance(source, Step) else source
        target_list = targets if isinstance(targets, list) else [targets]
        target_ids = [t.step_id if isinstance(t, Step) else t for t in target_list]
        transition = Transition[StateSchema](source=src_id, targets=target_ids, condition=condition)
        self.transitions.setdefault(src_id, []).append(transition)

    def run(self, state: StateSchema, resource: Optional[Resource] = None) -> Run[StateSchema]:
        expected_fields = get_type_hints(self.state_schema)
        if not set(state.keys()) & set(expected_fields):
            raise ValueError(f"Initial state must have at least one field from the schema. "
                             f"Expected fields: {list(expected_fields)}")

        entry_points = [s for s in self.steps.values() if isinstance(s, EntryPoint)]
        if len(entry_points) != 1:
            raise ValueError(f"Workflow needs exactly one EntryPoint, found {len(entry_points)}")

        current_run = Run.create()
        current_step_id = entry_points[0].step_id

        for _ in range(self.max_steps):
            step = self.steps[current_step_id]
            if isinstance(step, Termination):
                logger.debug("run %d: terminating", current_run.run_id)
                break

            started = time.perf_counter()
            state = step.run(state, self.state_schema, resource)
            elapsed = time.perf_counter() - started
            logger.debug("run %d: executed %s in %.3f ms", current_run.run_id, current_step_id, elapsed * 1e3)
            current_run.add_snapshot(Snapshot(current_step_id, copy.deepcopy(state), elapsed))

            next_steps: List[str] = []
            for t in self.transitions.get(current_step_id, []):
                next_steps += t.resolve(state)
            if not next_steps:
                raise ValueError(f"No transitions found from step: {current_step_id}")
            if len(next_steps) > 1:
                raise NotImplementedError("Parallel execution not implemented yet.")
            current_step_id = next_steps[0]
        else:
            raise RuntimeError(f"Workflow exceeded {self.max_steps} steps")

        current_run.complete()
        return current_run
