"""
profile文档适配器：JSON文档与ProblemInstance之间的转换
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import List, Mapping, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from ..core.errors import InstanceValidationError, ProfileParseError
from ..core.instance import (
    LINK_PRESETS,
    CompressionOverhead,
    ExplicitTransfers,
    LayerKind,
    LayerSpec,
    LinkProfile,
    ProblemInstance,
    ResidualBlock,
    TransferEntry,
    normalize_link_name,
)
from ..core.profiles import GroupedProfile, ProfileEntry
from ..core.types import Platform

logger = logging.getLogger(__name__)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LayerModel(_Model):
    index: int
    name: str = ""
    kind: LayerKind = LayerKind.OTHER
    input_bytes: int
    output_bytes: int
    weight_bytes: int = 0
    compressible: bool = True
    zero_ratio: Optional[float] = None
    compression_ratio: Optional[float] = None


class ResidualBlockModel(_Model):
    source_layer: int
    sink_layer: int


class ProfileEntryModel(_Model):
    i: int
    j: int
    latency_ms: float
    energy_mJ: float = 0.0


class PlatformProfileModel(_Model):
    batch_size: int = 1
    entries: List[ProfileEntryModel]


class ProfilesModel(_Model):
    batch_size: int = 1
    mobile: Union[List[ProfileEntryModel], PlatformProfileModel]
    cloud: Union[List[ProfileEntryModel], PlatformProfileModel]


class LinkModel(_Model):
    name: str = "custom"
    uplink_mbps: Optional[float] = None
    downlink_mbps: Optional[float] = None
    alpha_u: Optional[float] = None
    alpha_d: Optional[float] = None
    beta: Optional[float] = None
    rtt_ms: float = 0.0
    offline: bool = False


class TransferEntryModel(_Model):
    latency_ms: float
    energy_mJ: float = 0.0


class ExplicitTransfersModel(_Model):
    upload_input: TransferEntryModel
    upload: List[TransferEntryModel] = []
    download: List[TransferEntryModel] = []


class CompressionOverheadModel(_Model):
    layer: int
    latency_ms: float = 0.0
    energy_mJ: float = 0.0


class ProfileDocument(_Model):
    """profile文档的schema"""

    name: str = ""
    synthetic: bool = False
    batch: int = 1
    layers: List[LayerModel]
    residual_blocks: List[ResidualBlockModel] = []
    profiles: ProfilesModel
    link: LinkModel
    explicit_transfers: Optional[ExplicitTransfersModel] = None
    mobile_idle_power_mW: float = 0.0
    compression_overhead: List[CompressionOverheadModel] = []


def _parse_error(exc: ValidationError) -> ProfileParseError:
    errors = exc.errors()
    paths = [".".join(str(part) for part in error["loc"]) for error in errors]
    message = "; ".join(f"{path}: {error['msg']}" for path, error in zip(paths, errors))
    return ProfileParseError(paths[0] if paths else "", message)


def _profile(platform: Platform, model, default_batch: int) -> GroupedProfile:
    if isinstance(model, PlatformProfileModel):
        entries, batch_size = model.entries, model.batch_size
    else:
        entries, batch_size = model, default_batch
    table = {}
    duplicates = []
    for position, entry in enumerate(entries):
        span = (entry.i, entry.j)
        if span in table:
            duplicates.append(f"profiles.{platform.value}.{position}: duplicate entry {span}")
        table[span] = ProfileEntry(entry.latency_ms, entry.energy_mJ)
    if duplicates:
        raise InstanceValidationError(duplicates)
    return GroupedProfile(platform, table, batch_size)


def _link(model: LinkModel) -> LinkProfile:
    fields = {
        key: value
        for key, value in model.model_dump().items()
        if value is not None and key != "name"
    }
    key = normalize_link_name(model.name)
    if key in LINK_PRESETS:
        return LinkProfile.preset(key, **fields)
    return LinkProfile(name=model.name, **fields)


def _entry(model: TransferEntryModel) -> TransferEntry:
    return TransferEntry(model.latency_ms, model.energy_mJ)


def _build(document: ProfileDocument) -> ProblemInstance:
    transfers = None
    if document.explicit_transfers is not None:
        explicit = document.explicit_transfers
        transfers = ExplicitTransfers(
            upload_input=_entry(explicit.upload_input),
            upload=tuple(_entry(e) for e in explicit.upload),
            download=tuple(_entry(e) for e in explicit.download),
        )
    return ProblemInstance(
        layers=tuple(LayerSpec(**layer.model_dump()) for layer in document.layers),
        mobile_profile=_profile(Platform.MOBILE, document.profiles.mobile, document.profiles.batch_size),
        cloud_profile=_profile(Platform.CLOUD, document.profiles.cloud, document.profiles.batch_size),
        link=_link(document.link),
        residual_blocks=tuple(
            ResidualBlock(b.source_layer, b.sink_layer) for b in document.residual_blocks
        ),
        mobile_idle_power_mW=document.mobile_idle_power_mW,
        compression_overhead=tuple(
            CompressionOverhead(o.layer, o.latency_ms, o.energy_mJ)
            for o in document.compression_overhead
        ),
        explicit_transfers=transfers,
        batch=document.batch,
        name=document.name,
        synthetic=document.synthetic,
    )


def load_instance(document: Union[str, bytes, Mapping]) -> ProblemInstance:
    """
    从profile文档构造实例

    Args:
        document: JSON文本或已解析的字典

    Returns:
        校验后的实例

    Raises:
        ProfileParseError: 文档不符合schema，消息包含字段路径
        InstanceValidationError: 实例不变量不成立，列出全部失败项
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ProfileParseError("", f"invalid JSON: {exc}") from None
    try:
        parsed = ProfileDocument.model_validate(document)
    except ValidationError as exc:
        raise _parse_error(exc) from None
    instance = _build(parsed)
    logger.debug("loaded instance %r with %d layers", instance.name, instance.n)
    return instance


def read_instance(path: Union[str, Path]) -> ProblemInstance:
    """读取profile文档文件"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileParseError(str(path), f"cannot read file: {exc.strerror}") from None
    return load_instance(text)


def _entries(profile: GroupedProfile) -> List[dict]:
    return [
        {"i": i, "j": j, "latency_ms": entry.latency_ms, "energy_mJ": entry.energy_mJ}
        for (i, j), entry in sorted(profile.entries.items())
    ]


def _profile_dump(profile: GroupedProfile, batch_size: int):
    if profile.batch_size == batch_size:
        return _entries(profile)
    return {"batch_size": profile.batch_size, "entries": _entries(profile)}


def dump_instance(instance: ProblemInstance) -> dict:
    """
    把实例写回profile文档

    Args:
        instance: 问题实例

    Returns:
        可直接json.dumps的字典
    """
    link = instance.link
    batch_size = instance.mobile_profile.batch_size
    data = {
        "name": instance.name,
        "synthetic": instance.synthetic,
        "batch": instance.batch,
        "layers": [
            {
                "index": layer.index,
                "name": layer.name,
                "kind": layer.kind.value,
                "input_bytes": layer.input_bytes,
                "output_bytes": layer.output_bytes,
                "weight_bytes": layer.weight_bytes,
                "compressible": layer.compressible,
                "zero_ratio": layer.zero_ratio,
                "compression_ratio": layer.compression_ratio,
            }
            for layer in instance.layers
        ],
        "residual_blocks": [
            {"source_layer": b.source_layer, "sink_layer": b.sink_layer}
            for b in instance.residual_blocks
        ],
        "profiles": {
            "batch_size": batch_size,
            "mobile": _profile_dump(instance.mobile_profile, batch_size),
            "cloud": _profile_dump(instance.cloud_profile, batch_size),
        },
        "link": {
            "name": link.name,
            "uplink_mbps": link.uplink_mbps,
            "downlink_mbps": link.downlink_mbps,
            "alpha_u": link.alpha_u,
            "alpha_d": link.alpha_d,
            "beta": link.beta,
            "rtt_ms": link.rtt_ms,
            "offline": link.offline,
        },
        "mobile_idle_power_mW": instance.mobile_idle_power_mW,
        "compression_overhead": [
            {"layer": o.layer, "latency_ms": o.latency_ms, "energy_mJ": o.energy_mJ}
            for o in instance.compression_overhead
        ],
    }
    if instance.explicit_transfers is not None:
        transfers = instance.explicit_transfers

        def entry(e: TransferEntry) -> dict:
            return {"latency_ms": e.latency_ms, "energy_mJ": e.energy_mJ}

        data["explicit_transfers"] = {
            "upload_input": entry(transfers.upload_input),
            "upload": [entry(e) for e in transfers.upload],
            "download": [entry(e) for e in transfers.download],
        }
    # 经过schema校验，保证写出的文档可以读回
    return ProfileDocument.model_validate(data).model_dump(mode="json", exclude_none=True)


def dumps_instance(instance: ProblemInstance) -> str:
    return json.dumps(dump_instance(instance), indent=2, ensure_ascii=False) + "\n"


def write_instance(instance: ProblemInstance, path: Union[str, Path]):
    Path(path).write_text(dumps_instance(instance), encoding="utf-8")


def instance_hash(instance: ProblemInstance) -> str:
    """实例规范化文档的sha256"""
    canonical = json.dumps(dump_instance(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
