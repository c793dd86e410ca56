"""svarkit: estimation, identification, and inference for structural VARs."""

__version__ = "0.1.0"

from .datamodel import TimeSeriesDataset, TransformSpec, load_csv, transform
from .var import (
    CompanionMatrix,
    StabilityReport,
    TestResult,
    VarModel,
    asymptotic_cov,
    check_stability,
    companion,
    fit_var,
    forecast_iterated,
    granger_wald,
    ma_coefficients,
)
from .lagselect import ICTable, SelectedLag, ic_table, sequential_wald
from .ident import (
    IrfBoundInterval,
    SignRestrictionSet,
    StructuralModel,
    identify_longrun,
    identify_proxy,
    identify_recursive,
    j_test,
    sign_restriction_bounds,
)
from .dynamics import (
    ConnectednessTable,
    FevdTable,
    HistoricalDecomposition,
    ImpulseResponseSet,
    fevd,
    gfevd_connectedness,
    historical_decomposition,
    irf,
)
from .localproj import LpEstimate, fit_lp, lp_irf
from .bootstrap import (
    BootstrapConfig,
    BootstrapDraws,
    irf_ci,
    mbb_distribution,
    mbb_resample,
)
from .vecm import (
    PermanentTransitory,
    VecmModel,
    gg_decompose,
    longrun_C,
    orthogonal_complement,
    var_to_vecm,
    vecm_to_var,
)
from .robust import (
    MltsSearchConfig,
    RobustVarModel,
    fit_mlts,
    reweight_rmlts,
    robust_order_select,
)
from .breaks import (
    BreakReport,
    BssResult,
    CusumResult,
    bss_detect,
    cusum_covariance_test,
    detect_breaks,
    lic_screen,
)

__all__ = [name for name in dir() if not name.startswith("_")]
