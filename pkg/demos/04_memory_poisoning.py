#!/usr/bin/env python3
"""Memory poisoning, both arms: 20 fake high-severity entries written straight
into history.json inflate the next capture window 34 s -> 170 s; a sealed
history flags the tamper, and an approved rollback restores the baseline.

Run: python demos/04_memory_poisoning.py
"""

from netsentinel.harness import ScenarioConfig, emit_validation_summary, execute_tc2

reports = []
for defense in ("off", "on"):
    outcome = execute_tc2(ScenarioConfig(defense=defense))
    reports.append(outcome.report)
    m = outcome.report.metrics
    print(f"\n=== defense {defense} ===")
    print(f"clean history      -> capture window {m['baseline_duration_s']:.0f} s")
    print(f"after injection    -> tuner would choose {m['poisoned_duration_s']:.0f} s")
    if defense == "on":
        print(f"seal verification  -> tampered: {m['tamper_detected']}")
        explanation = outcome.agent.explanations[-1]
        print(f"reasoner           -> {explanation.summary}")
        for action in explanation.recommended_actions:
            print(f"                      proposed {action.kind.value} ({action.policy.value})")
        print(f"after rollback     -> capture window {m['post_rollback_duration_s']:.0f} s")
    print(f"effective window   -> {m['effective_duration_s']:.0f} s "
          f"(queue load {m['effective_queue_integral']:,.0f} packet-seconds)")
    print(f"validated: {outcome.report.validated}")

print("\n" + emit_validation_summary(reports))
