"""Real-time detection of local semimartingale violations in
high-frequency price series: GLR-CUSUM stopping rules, a calibrated
stochastic-volatility simulator, run-length asymptotics, a Monte Carlo
harness and an empirical region-analysis pipeline.
"""

__version__ = "0.1.0"

from .detector import (AlarmEvent, DetectorConfig, DetectorState,
                       ViolationRegion, first_alarm, identify_regions,
                       scan_day, standardize_series, standardized_increment,
                       truncation_scale)
from .errors import (ConfigError, DataError, DriftscanError, ParseError,
                     WindowRangeError)
from .ingest import (CorpusReport, TradingDay, analyze_corpus,
                     day_block_counts, duration_histogram, load_corpus,
                     rescale_sv, rolling_tv, vol_comparison, yearly_counts)
from .montecarlo import (McExperiment, McSummary, db_config_annualized,
                         exponentiality_check, paper_heston, run_arl,
                         run_edd, run_fdr)
from .sim_paths import (DbConfig, HestonConfig, PnConfig, PricePath,
                        SimulatedDay, SpotVolSeries, apply_db_noise,
                        apply_pn_noise, db_cumulative, db_increment,
                        derive_seed, days_to_csv, pn_decay, proxy_spot_vol,
                        simulate_days, simulate_heston_day)
from .theory import (FdrBound, TheoryConstants, arl_theory, big_d, d_of_a,
                     edd_closed_form, fdr_theory, nu_approx, nu_exact)
