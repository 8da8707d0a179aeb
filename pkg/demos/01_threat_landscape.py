#!/usr/bin/env python3
"""Walk through the threat landscape: layers, scoring, and the risk matrix.

Run: python demos/01_threat_landscape.py
"""

from netsentinel.maestro import (
    MaestroLayer,
    OrdinalLevel,
    build_risk_matrix,
    builtin_registry,
    emit_report,
    score,
)

print("The seven MAESTRO layers:")
for layer in MaestroLayer:
    print(f"  {layer}")

print("\nOrdinal risk scoring, R = P x I x E:")
L, M, H = OrdinalLevel.LOW, OrdinalLevel.MEDIUM, OrdinalLevel.HIGH
for p, i, e in [(L, L, H), (M, M, M), (H, H, L), (H, H, H)]:
    print(
        f"  P={p.label:<6} I={i.label:<6} E={e.label:<6} -> R = "
        f"{int(p)} x {int(i)} x {int(e)} = {score(p, i, e)}"
    )

print("\nThe built-in registry, ranked:")
matrix = build_risk_matrix(builtin_registry())
print(emit_report(matrix, "markdown").decode())

top = matrix.ranked_rows()[0]
print(f"Top threat: #{top.id} {top.name} (score {top.assessment.score})")
print(f"  {top.definition}")
print(f"  e.g. {top.example_use_case}")
