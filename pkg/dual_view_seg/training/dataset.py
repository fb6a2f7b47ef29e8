"""Datasets and batching for training and evaluation"""

from collections.abc import Sequence
from logging import getLogger
from typing import NamedTuple

import torch
from torch.utils.data import DataLoader, Dataset

from dual_view_seg.cache import SampleCache
from dual_view_seg.config.settings import ModelConfig, TrainConfig
from dual_view_seg.errors import SceneGenerationError
from dual_view_seg.generators.scenes import SceneGenerator
from dual_view_seg.generators.views import prepare_views
from dual_view_seg.models import ManifestRecord, Sample, SceneSpec, ViewBundle
from dual_view_seg.parsers.manifest import load_sample
from dual_view_seg.parsers.vocabulary import Vocabulary, default_vocabulary

logger = getLogger(__name__)

VALIDATION_SEED_OFFSET = 1_000_000
RETRY_SEED_STRIDE = 100_003
MAX_SCENE_RETRIES = 10


class Batch(NamedTuple):
    """Collated view bundles

    remote (B, 3, H, W), close (B, n^2, 3, H, W), mask (B, nH, nW) float,
    ids and attn_mask (B, L).
    """

    sample_ids: list[str]
    remote: torch.Tensor
    close: torch.Tensor
    mask: torch.Tensor
    ids: torch.Tensor
    attn_mask: torch.Tensor
    categories: list[str]
    size_classes: list[str]


def collate_views(bundles: Sequence[ViewBundle]) -> Batch:
    return Batch(
        sample_ids=[b.sample_id for b in bundles],
        remote=torch.stack([b.remote for b in bundles]),
        close=torch.stack([b.close for b in bundles]),
        mask=torch.stack([b.mask_full for b in bundles]),
        ids=torch.tensor([b.tokens.ids for b in bundles], dtype=torch.long),
        attn_mask=torch.tensor([b.tokens.attn_mask for b in bundles], dtype=torch.bool),
        categories=[b.category for b in bundles],
        size_classes=[b.size_class for b in bundles],
    )


def scene_spec_for(train: TrainConfig) -> SceneSpec:
    return SceneSpec(image_side=train.scene_side, tiny_fraction=train.tiny_fraction)


def split_seeds(base: int, train: TrainConfig) -> tuple[list[int], list[int]]:
    """Disjoint scene seeds for the training and validation splits"""
    train_seeds = [base + i for i in range(train.train_samples)]
    val_base = base + VALIDATION_SEED_OFFSET
    return train_seeds, [val_base + i for i in range(train.val_samples)]


class SyntheticDataset(Dataset[ViewBundle]):
    """Scenes rendered on demand from a list of seeds"""

    def __init__(
        self,
        seeds: Sequence[int],
        cfg: ModelConfig,
        scene_spec: SceneSpec | None = None,
        vocab: Vocabulary | None = None,
        cache: SampleCache | None = None,
    ):
        self.seeds = list(seeds)
        self.cfg = cfg
        self.scene_spec = scene_spec or SceneSpec()
        self.vocab = vocab or default_vocabulary()
        self.cache = cache
        self.generator = SceneGenerator(self.scene_spec)

    def __len__(self) -> int:
        return len(self.seeds)

    def sample(self, index: int) -> Sample:
        """Render the scene of a seed, moving to derived seeds on failure"""
        seed = self.seeds[index]
        for attempt in range(MAX_SCENE_RETRIES):
            current = seed + attempt * RETRY_SEED_STRIDE
            try:
                if self.cache is not None:
                    sample = self.cache.get_sample(current, self.scene_spec)
                else:
                    sample = self.generator.generate(current)
            except SceneGenerationError as e:
                logger.debug(f"Seed {current} rejected: {e}")
                continue
            return sample.model_copy(update={"sample_id": f"synth_{seed:06d}"})
        raise SceneGenerationError(
            f"no valid scene for seed {seed} after {MAX_SCENE_RETRIES} attempts"
        )

    def __getitem__(self, index: int) -> ViewBundle:
        return prepare_views(self.sample(index), self.cfg, self.vocab)


class ManifestDataset(Dataset[ViewBundle]):
    """Samples listed in a dataset manifest"""

    def __init__(
        self,
        records: Sequence[ManifestRecord],
        cfg: ModelConfig,
        vocab: Vocabulary | None = None,
    ):
        self.records = list(records)
        self.cfg = cfg
        self.vocab = vocab or default_vocabulary()

    def __len__(self) -> int:
        return len(self.records)

    def sample(self, index: int) -> Sample:
        return load_sample(self.records[index])

    def __getitem__(self, index: int) -> ViewBundle:
        return prepare_views(self.sample(index), self.cfg, self.vocab)


def make_loader(
    dataset: Dataset[ViewBundle],
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
    num_workers: int = 0,
) -> DataLoader[ViewBundle]:
    """DataLoader with a seeded shuffling order"""
    generator = torch.Generator()
    generator.manual_seed(seed)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        collate_fn=collate_views,
        num_workers=num_workers,
        generator=generator,
    )
