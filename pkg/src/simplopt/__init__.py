"""simplopt: density-based topology optimization with the SiMPL method.

Library surface re-exported lazily so that environment configuration in the
CLI (thread caps) can run before the numeric stack loads.
"""
from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    # fields
    "DensityField": ".fields",
    "LatentField": ".fields",
    "AdmissibleParams": ".fields",
    "sigmoid": ".fields",
    "logit": ".fields",
    "fermi_dirac_entropy": ".fields",
    "bregman_divergence": ".fields",
    "weighted_inner": ".fields",
    # grid
    "CartesianMesh": ".grid",
    "FemSpaces": ".grid",
    "FilterOperators": ".grid",
    "ElasticModel": ".grid",
    "assemble_unit_stiffness": ".grid",
    "assemble_filter_operators": ".grid",
    # linsolve
    "cg_solve": ".linsolve",
    "SolveReport": ".linsolve",
    "LinearSolveError": ".linsolve",
    # physics
    "ReducedObjective": ".physics",
    "MechanismParams": ".physics",
    "EvalCache": ".physics",
    "apply_filter": ".physics",
    "simp_stiffness": ".physics",
    # simpl
    "SimplConfig": ".simpl",
    "OptTrace": ".simpl",
    "simpl_solve": ".simpl",
    "LineSearchError": ".simpl",
    # baselines
    "BaselineConfig": ".baselines",
    "l2_project": ".baselines",
    "stationarity": ".baselines",
    "pgd_solve": ".baselines",
    "oc_solve": ".baselines",
    # presets / driver
    "Problem": ".presets",
    "build_problem": ".presets",
    "RunConfig": ".cli",
    "run": ".cli",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    return getattr(import_module(module, __name__), name)
