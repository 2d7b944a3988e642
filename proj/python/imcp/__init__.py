"""Compression-and-delivery toolkit for low-bandwidth satellite imagery.

Thin re-export of the `_imcp` extension. Images are numpy uint8 arrays
shaped (h, w) for grayscale or (h, w, 3) for RGB; compressed blobs, model
checkpoints and PNM files travel as `bytes`.
"""

from ._imcp import (  # noqa: F401
    DecodeError,
    IoError,
    Model,
    NumericError,
    Payload,
    ValidationError,
    bitrate_bpp,
    blob_info,
    build_manifest,
    caption_sentence,
    compare_policies,
    compression_ratio_bytes,
    compression_ratio_spatial,
    crop,
    decode_image,
    encode_image,
    extract_cutouts,
    generate_caption,
    generate_corpus,
    generate_scene,
    make_payload,
    mse,
    package_image,
    psnr,
    read_annotations,
    read_pnm,
    resize_nearest,
    simulate,
    ssim,
    train,
    write_annotations,
    write_pnm,
)

__all__ = [
    "DecodeError",
    "IoError",
    "Model",
    "NumericError",
    "Payload",
    "ValidationError",
    "bitrate_bpp",
    "blob_info",
    "build_manifest",
    "caption_sentence",
    "compare_policies",
    "compression_ratio_bytes",
    "compression_ratio_spatial",
    "crop",
    "decode_image",
    "encode_image",
    "extract_cutouts",
    "generate_caption",
    "generate_corpus",
    "generate_scene",
    "make_payload",
    "mse",
    "package_image",
    "psnr",
    "read_annotations",
    "read_pnm",
    "resize_nearest",
    "simulate",
    "ssim",
    "train",
    "write_annotations",
    "write_pnm",
]
