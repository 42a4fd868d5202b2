"""Game state shared between the referee, behaviors and telemetry."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class GamePhase(Enum):
    INITIAL = "INITIAL"
    READY = "READY"
    SET = "SET"
    PLAYING = "PLAYING"
    FINISHED = "FINISHED"


PHASE_ORDER = [GamePhase.INITIAL, GamePhase.READY, GamePhase.SET,
               GamePhase.PLAYING, GamePhase.FINISHED]


@dataclass
class GameState:
    phase: GamePhase = GamePhase.INITIAL
    penalized: bool = False
    kickoff_ours: bool = True

    @property
    def may_move(self) -> bool:
        return self.phase == GamePhase.PLAYING and not self.penalized
