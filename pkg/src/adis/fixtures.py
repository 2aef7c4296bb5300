"""Small bundled models used by the test suite, docs and demo CLI runs.

``chain2``: X1 -> X2, both binary, P(X1=1)=0.6, P(X2=1|X1)=(0.2, 0.7).
With evidence X2=1 the target is P(X2=1) = 0.5, the optimal sampler over X1
is (0.16, 0.84) and the prior sampler has weight variance 0.06.

``gamble1``: chain2's X1 feeding a chance outcome X2 whose distribution also
depends on a binary decision A, with utility U(X2) = (1, 3).  Action values
are V(0) = 2.0 and V(1) = 2.48.
"""
from __future__ import annotations

from .model import (
    Cpt,
    Decision,
    EstimationProblem,
    InfluenceDiagram,
    Network,
    Utility,
    Variable,
)


def chain2() -> Network:
    return Network(
        variables=(
            Variable("X1", 2),
            Variable("X2", 2, ("X1",)),
        ),
        cpts={
            "X1": Cpt.from_rows([[0.4, 0.6]]),
            "X2": Cpt.from_rows([[0.8, 0.2], [0.3, 0.7]]),
        },
    )


def chain2_problem() -> EstimationProblem:
    """chain2 with its canonical evidence X2=1; true value 0.5."""
    return EstimationProblem(chain2(), {"X2": 1})


def gamble1() -> InfluenceDiagram:
    return InfluenceDiagram(
        network=Network(
            variables=(
                Variable("X1", 2),
                Variable("X2", 2, ("X1", "A")),
            ),
            cpts={
                "X1": Cpt.from_rows([[0.4, 0.6]]),
                # rows in (X1, A) mixed-radix order: (0,0), (0,1), (1,0), (1,1)
                "X2": Cpt.from_rows([[0.8, 0.2], [0.5, 0.5], [0.3, 0.7], [0.1, 0.9]]),
            },
        ),
        decision=Decision("A", 2),
        utility=Utility(("X2",), (1.0, 3.0)),
    )


def gamble1_problem(action: int = 0) -> EstimationProblem:
    """gamble1 evaluated at the given action; V(0)=2.0, V(1)=2.48."""
    return EstimationProblem(gamble1(), {}, action=action)
