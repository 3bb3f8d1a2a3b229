from ._core import check_config, estimate, estimator_names, run

__all__ = ["check_config", "estimate", "estimator_names", "run"]
