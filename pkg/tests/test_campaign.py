"""Test suite orchestration."""

from ou_frequency import campaign as campaign_module
from ou_frequency.campaign import Campaign
from ou_frequency.config import Command, RunConfig


def test_threaded_suites_share_one_curve(monkeypatch):
    """Test the shared curve is computed once when suites run on several threads."""
    calls = []
    compute_curve = campaign_module.compute_curve

    def counting(*args, **kwargs):
        calls.append(args[1])
        return compute_curve(*args, **kwargs)

    monkeypatch.setattr(campaign_module, "compute_curve", counting)
    campaign = Campaign(RunConfig(command=Command.VERIFY, levels=[0], r_max=8.0, threads=4))
    result = campaign.run()
    assert len(calls) == 1
    assert [report.name for report in result.log.reports][:2] == ["growth", "sharpness"]


def test_serial_and_threaded_runs_agree():
    """Test thread count does not change the reports or their order."""
    reports = []
    for threads in (1, 3):
        config = RunConfig(command=Command.VERIFY, levels=[0], r_max=8.0, threads=threads)
        result = Campaign(config).run()
        reports.append([(report.name, report.status) for report in result.log.reports])
    assert reports[0] == reports[1]
