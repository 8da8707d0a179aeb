"""netsentinel: a self-monitoring network telemetry agent.

Detects traffic anomalies from replayed captures, tunes its own capture
duration from persisted severity history, scores its threat landscape with
the seven-layer MAESTRO model, and ships an adversarial harness that
reproduces two validated attacks (resource exhaustion, memory poisoning)
together with the layered defenses that neutralize them.
"""

__version__ = "0.1.0"
