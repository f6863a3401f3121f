import pytest

from support import SMOKE, TRAINING, read_records, write_records
from wozbridge.models import load_checkpoint
from wozbridge.training import train_collector, train_labeler


@pytest.fixture(scope="session")
def ten_record_labeler_file(tmp_path_factory):
    records = read_records(TRAINING / "labeler_smoke.jsonl")[:10]
    return write_records(tmp_path_factory.mktemp("data") / "labeler10.jsonl", records)


@pytest.fixture(scope="session")
def collector_summary_and_ckpt(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "collector.pt"
    summary = train_collector(TRAINING / "collector_smoke.jsonl", path, SMOKE)
    return summary, path


@pytest.fixture(scope="session")
def labeler_summary_and_ckpt(tmp_path_factory, ten_record_labeler_file):
    path = tmp_path_factory.mktemp("ckpt") / "labeler.pt"
    summary = train_labeler(ten_record_labeler_file, path, SMOKE)
    return summary, path


@pytest.fixture(scope="session")
def collector_model(collector_summary_and_ckpt):
    return load_checkpoint(collector_summary_and_ckpt[1])


@pytest.fixture(scope="session")
def labeler_model(labeler_summary_and_ckpt):
    return load_checkpoint(labeler_summary_and_ckpt[1])
