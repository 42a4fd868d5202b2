"""State controller: a finite state machine with a planned state queue."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable


class ConfigurationError(ValueError):
    pass


STAY = "stay"
ADVANCE = "advance"
TERMINATE = "terminate"


def jump(state_name: str) -> tuple:
    return ("jump", state_name)


@dataclass
class State:
    name: str
    step: Callable[[Any], Any] | None = None
    enter: Callable[[Any], None] | None = None
    exit: Callable[[Any], None] | None = None
    transition: Callable[[Any], Any] | None = None  # returns STAY etc.


class StateController:
    """Runs one active state; planned future states wait in a queue.

    Transition results: STAY keeps the active state, ADVANCE pops the
    next queued state, jump(name) switches to a declared state, TERMINATE
    ends the controller.  Exit of the old state always precedes enter of
    the new one.
    """

    def __init__(self, states: list[State], queue: list[str],
                 context: Any = None):
        if not queue:
            raise ConfigurationError("initial queue must be non-empty")
        self.states = {s.name: s for s in states}
        for name in queue:
            if name not in self.states:
                raise ConfigurationError(f"unknown state {name!r} in queue")
        self.queue = list(queue)
        self.context = context
        self.finished = False
        self.active: State | None = None
        self._activate(self.queue.pop(0))

    def _activate(self, name: str) -> None:
        if name not in self.states:
            raise ConfigurationError(f"jump to undeclared state {name!r}")
        self.active = self.states[name]
        if self.active.enter is not None:
            self.active.enter(self.context)

    def _deactivate(self) -> None:
        if self.active is not None and self.active.exit is not None:
            self.active.exit(self.context)
        self.active = None

    def append(self, name: str) -> None:
        if name not in self.states:
            raise ConfigurationError(f"unknown state {name!r}")
        self.queue.append(name)

    def step(self) -> str:
        """Returns "running" or "finished"."""
        if self.finished:
            return "finished"
        state = self.active
        if state.step is not None:
            state.step(self.context)
        result = STAY if state.transition is None else \
            state.transition(self.context)
        if result == STAY:
            return "running"
        if result == TERMINATE:
            self._deactivate()
            self.finished = True
            return "finished"
        if result == ADVANCE:
            self._deactivate()
            if not self.queue:
                self.finished = True
                return "finished"
            self._activate(self.queue.pop(0))
            return "running"
        if isinstance(result, tuple) and len(result) == 2 and \
                result[0] == "jump":
            self._deactivate()
            self._activate(result[1])
            return "running"
        raise ConfigurationError(f"invalid transition result {result!r}")
