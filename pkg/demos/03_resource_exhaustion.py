#!/usr/bin/env python3
"""Resource exhaustion, both arms: replaying a 10,000 pps flood against a
6,000 pps agent stretches the telemetry cadence past 13 s; with the defense
arm on, the auto rate limit pulls it back down.

Run: python demos/03_resource_exhaustion.py
"""

from netsentinel.harness import ScenarioConfig, emit_validation_summary, execute_tc1

reports = []
for defense in ("off", "on"):
    outcome = execute_tc1(ScenarioConfig(defense=defense))
    reports.append(outcome.report)
    agent = outcome.agent
    print(f"\n=== defense {defense} ===")
    print("telemetry interval per snapshot (s):")
    for snap in agent.snapshots:
        bar = "#" * int(snap.update_interval_s)
        flag = "  <- degraded" if snap.update_interval_s > 7.5 * 1.25 else ""
        print(f"  seq {snap.seq:>2}  t={snap.t:>7.2f}  {snap.update_interval_s:>6.2f}  {bar}{flag}")
    print(f"alerts raised: {len(agent.events)} "
          f"(first: {agent.events[0].rule_id} at {agent.events[0].observed:,.0f} pps)" if agent.events else "no alerts")
    for proposal in agent.proposals.values():
        print(f"  proposal {proposal.id}: {proposal.kind.value} -> {proposal.status.value}")
    m = outcome.report.metrics
    print(f"baseline {m['baseline_interval_s']:.2f}s, peak {m['peak_interval_s']:.2f}s, "
          f"ratio x{m['degradation_ratio']:.2f}, validated={outcome.report.validated}")

print("\n" + emit_validation_summary(reports))
