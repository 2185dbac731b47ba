"""beadlab: Casimir and double-layer interactions between trapped
microspheres in electrolyte, with a Brownian-dynamics synthetic experiment
generator and the full optical-tweezers analysis pipeline."""

from . import colloid, errors, geometry, hydro, medium, planar, simulate, spherescatter

__version__ = "0.1.0"
