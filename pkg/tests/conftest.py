import pytest

from netsentinel.agent import AgentConfig, MonitoringAgent


@pytest.fixture
def make_agent(tmp_path):
    """Factory for isolated agents with state under tmp_path."""

    def factory(**overrides) -> MonitoringAgent:
        n = len(list(tmp_path.glob("agent-*"))) + 1
        root = tmp_path / f"agent-{n}"
        root.mkdir()
        config = AgentConfig(
            history_path=root / "history.json",
            forensic_path=root / "forensic.log",
            snapshot_dir=root / "snapshots",
        )
        for key, value in overrides.items():
            setattr(config, key, value)
        return MonitoringAgent(config)

    return factory
