"""Exception taxonomy shared by all beadlab modules.

Two families are distinguished on purpose:

* genuine failures (bad input, quadrature that did not converge, a
  round-trip matrix that is not a contraction), and
* *physics signals* — outcomes that are data, not bugs: a diverging ionic
  response at zero frequency, an infinite screening length in ion-free
  solvent, loss of a stable trap equilibrium.  The CLI maps these to their
  own exit code so scripted scans can branch on them.
"""


class BeadlabError(Exception):
    """Base class for everything raised deliberately by this package."""


class DomainError(BeadlabError, ValueError):
    """Input outside the physical domain of an operation."""


class AccuracyError(BeadlabError):
    """A numerical result failed its convergence/tolerance contract.

    Carries the best available estimate and the achieved error bound so a
    caller can decide whether the partial answer is still usable.
    """

    def __init__(self, message, estimate=None, bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.bound = bound


class PassivityError(BeadlabError):
    """A round-trip operator had spectral radius >= 1 (or 1-M lost
    positive-definiteness).  Always indicates a bug or an unusable
    discretization, never physics."""


class FitFailureError(BeadlabError):
    """A model fit did not converge or has no admissible solution."""


class PhysicsSignal(BeadlabError):
    """Base for outcomes that are legitimate physics, not failures."""


class IonicDivergence(PhysicsSignal):
    """The ionic Drude term was evaluated at zero frequency, where it
    diverges; callers handle that limit symbolically."""


class InfiniteScreening(PhysicsSignal):
    """Debye length requested for an ion-free medium."""


class JumpIntoContact(PhysicsSignal):
    """No stable trap equilibrium: attraction gradient exceeds the trap
    stiffness everywhere below the optical equilibrium."""


class ConfigError(BeadlabError):
    """Configuration file failed schema validation (CLI exit code 2)."""
