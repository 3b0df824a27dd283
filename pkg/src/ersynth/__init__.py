"""Environment-restricted Petri net synthesis from finite transition systems.

The package decides, for a finite initialized deterministic labeled
transition system and per-place environment bounds (rho, kappa), whether a
weighted place/transition net exists whose reachability graph is isomorphic
to the input and whose places all have at most rho pre-transitions and
kappa post-transitions -- and constructs one when it exists.  It also ships
generators for the two hardness gadget families (hitting set and cubic
monotone one-in-three SAT) together with their certificate regions.
"""

from ersynth.ts import TransitionSystem, parse_ts, serialize_ts, validate, isomorphic
from ersynth.regions import Region, RegionSpec, SeparationAtom, atoms, expand_region_spec
from ersynth.synthesis import Bounds, SynthesisResult, synthesize, build_net
from ersynth.petri import PetriNet, reachability_graph, verify

__all__ = [
    "TransitionSystem",
    "parse_ts",
    "serialize_ts",
    "validate",
    "isomorphic",
    "Region",
    "RegionSpec",
    "SeparationAtom",
    "atoms",
    "expand_region_spec",
    "Bounds",
    "SynthesisResult",
    "synthesize",
    "build_net",
    "PetriNet",
    "reachability_graph",
    "verify",
]
