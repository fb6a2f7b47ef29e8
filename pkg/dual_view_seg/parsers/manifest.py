"""Dataset manifest parser

A manifest is a UTF-8 TSV file without header, one sample per line:
image path, mask path, expression, and optionally category and size class.
Relative paths are resolved against the manifest's directory.
"""

from csv import QUOTE_NONE
from logging import getLogger
from pathlib import Path

from pandas import DataFrame, Series, isna, read_csv
from pandas.errors import EmptyDataError, ParserError

from dual_view_seg.errors import ManifestError
from dual_view_seg.models import ManifestRecord, Sample, SampleMeta
from dual_view_seg.parsers.masks import read_image, read_mask

logger = getLogger(__name__)

COLUMNS = ["image", "mask", "expression", "category", "size_class"]


class ManifestParser:
    """Parse a manifest file into ManifestRecord objects"""

    def __init__(self, manifest_path: Path):
        self.manifest_path = manifest_path
        self.root = manifest_path.parent

    def parse(self) -> list[ManifestRecord]:
        """Parse the manifest, skipping malformed rows with a warning"""
        if not self.manifest_path.exists():
            raise ManifestError(f"manifest not found: {self.manifest_path}")
        try:
            df = read_csv(
                self.manifest_path,
                sep="\t",
                header=None,
                names=COLUMNS,
                dtype=str,
                quoting=QUOTE_NONE,
                encoding="utf-8",
                keep_default_na=False,
            )
        except EmptyDataError:
            return []
        except (ParserError, UnicodeDecodeError) as e:
            raise ManifestError(f"{self.manifest_path}: {e}") from e

        records: list[ManifestRecord] = []
        for index, row in df.iterrows():
            try:
                records.append(self._parse_row(row))
            except ValueError as e:
                logger.warning(f"Skipping manifest line {int(index) + 1}: {e}")
        logger.debug(f"Parsed {len(records)} records from {self.manifest_path}")
        return records

    def _parse_row(self, row: Series) -> ManifestRecord:
        image, mask, expression = (self._cell(row, c) for c in COLUMNS[:3])
        if not image or not mask or not expression:
            raise ValueError("image, mask and expression are required")
        return ManifestRecord(
            sample_id=Path(image).stem,
            image_path=str(self.resolve(image)),
            mask_path=str(self.resolve(mask)),
            expression=expression,
            category=self._cell(row, "category") or None,
            size_class=self._cell(row, "size_class") or None,
        )

    @staticmethod
    def _cell(row: Series, column: str) -> str:
        value = row.get(column)
        if value is None or isna(value):
            return ""
        return str(value).strip()

    def resolve(self, path: str) -> Path:
        candidate = Path(path)
        return candidate if candidate.is_absolute() else self.root / candidate

    def export_to_manifest(self, records: list[ManifestRecord]) -> None:
        """Write records back, with paths relative to the manifest when possible"""
        data = []
        for record in records:
            data.append(
                {
                    "image": self._relative(record.image_path),
                    "mask": self._relative(record.mask_path),
                    "expression": record.expression,
                    "category": record.category or "",
                    "size_class": record.size_class or "",
                }
            )
        self.manifest_path.parent.mkdir(parents=True, exist_ok=True)
        DataFrame(data, columns=COLUMNS).to_csv(
            self.manifest_path,
            sep="\t",
            header=False,
            index=False,
            quoting=QUOTE_NONE,
            encoding="utf-8",
        )

    def _relative(self, path: str) -> str:
        try:
            return str(Path(path).relative_to(self.root))
        except ValueError:
            return path


def load_sample(record: ManifestRecord) -> Sample:
    """Read the image and mask files named by a manifest record"""
    return Sample(
        sample_id=record.sample_id,
        image=read_image(Path(record.image_path)),
        mask=read_mask(Path(record.mask_path)),
        expression=record.expression,
        meta=SampleMeta(
            category=record.category or "",
            size_class=record.size_class or "",
            position="",
        ),
    )
