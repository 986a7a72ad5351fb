"""ebbflow: a deterministic round-based consensus simulator.

The package implements an ebb-and-flow protocol family as pure validator
state machines (an available chain confirmed by fast quorums or a depth rule,
plus a finality gadget producing an accountably-safe prefix), driven by a
sleepy-model network simulator, together with a checker suite that turns the
protocol's safety/liveness/accountability claims into pass/fail verdicts on
recorded traces.
"""

__version__ = "0.1.0"
