"""Modal principal component analysis."""

from .baseline import cpca_fit, dimension_95, specdist
from .errors import ModalPCAError
from .estimator import FitConfig, ModalComponent, MpcaModel, fit, objective
from .grid import GridConfig, grid_init, grid_search_2d
from .kernel import Bandwidth, gaussian_kernel, kernel_derivatives, scaled_kernel, terrell_bandwidth
from .io import read_csv, read_model, write_model
from .mode import ModeEstimate, half_sample_mode, newton_mode
from .robustness import InfluenceOperator, influence_mpca, lbbp, lbbp_for_sample

__version__ = "0.1.0"

__all__ = [
    "Bandwidth", "FitConfig", "GridConfig", "ModalComponent", "ModalPCAError", "ModeEstimate",
    "MpcaModel", "InfluenceOperator", "cpca_fit", "dimension_95", "fit", "gaussian_kernel", "grid_init",
    "grid_search_2d", "half_sample_mode", "influence_mpca", "kernel_derivatives", "lbbp",
    "lbbp_for_sample", "newton_mode", "objective", "read_csv", "read_model", "scaled_kernel",
    "specdist", "terrell_bandwidth", "write_model",
]
