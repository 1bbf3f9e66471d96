from .batch import BATCH_COLUMNS, run_batch
from .report import emit_report, emit_simulation_report, format_pvalue, format_report
from .study import StudyData, load_study
