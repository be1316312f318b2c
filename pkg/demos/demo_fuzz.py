#!/usr/bin/env python3
"""A seeded round-trip campaign: generate, decompose, score, summarize."""

from phaseiso import CampaignConfig, NormSpec, run_campaign

config = CampaignConfig(space=NormSpec.lp(5, 1), trials=50, seed=42)
report = run_campaign(config)

print(f"trials:      {len(report.outcomes)}")
print(f"successes:   {report.successes}")
print(f"failures:    {len(report.failures)}")
t_errors = [o.t_error for o in report.outcomes if o.t_error is not None]
print(f"max T error: {max(t_errors):.2e}")
print(f"wall time:   {report.wall_seconds:.2f}s")
print(f"every failing trial records its seed: {report.failing_seeds}")
