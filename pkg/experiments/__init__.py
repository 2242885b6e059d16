from experiments.sweeps import PropertyResult, SweepReport, run_sweeps

__all__ = ["PropertyResult", "SweepReport", "run_sweeps"]
