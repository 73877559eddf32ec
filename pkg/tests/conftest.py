import numpy as np
import pytest

from handuq import (
    DatasetManifest,
    Dims,
    GroundTruthMask,
    ManifestItem,
    ProbabilityMap,
    make_tags,
    write_mask,
    write_pmap,
)


def pmap(rows, dtype=np.float64) -> ProbabilityMap:
    values = np.asarray(rows, dtype=dtype)
    return ProbabilityMap(Dims(values.shape[1], values.shape[0]), values)


def mask(rows) -> GroundTruthMask:
    values = np.asarray(rows, dtype=bool)
    return GroundTruthMask(Dims(values.shape[1], values.shape[0]), values)


@pytest.fixture
def disk_dataset(tmp_path):
    """Write a small manifest-backed dataset; returns a builder function."""

    def build(items_spec, profiles=()):
        items = []
        for item_id, gt, learner_maps, tags in items_spec:
            mask_rel = f"{item_id}_mask.png"
            write_mask(gt, tmp_path / mask_rel)
            map_rels = []
            for i, m in enumerate(learner_maps):
                rel = f"{item_id}_l{i}.pmap"
                write_pmap(m, tmp_path / rel)
                map_rels.append(rel)
            items.append(
                ManifestItem(
                    id=item_id,
                    gt_mask_path=mask_rel,
                    learner_map_paths=tuple(map_rels),
                    tags=tags,
                )
            )
        return DatasetManifest(items=tuple(items), profiles=tuple(profiles), base_dir=tmp_path)

    return build


def simple_tags(*names, background="cluttered", view="side"):
    return make_tags(names or ("O1",), background, view)
