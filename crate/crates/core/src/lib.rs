//! Surround-view parking-slot pipeline.
//!
//! The library covers the full geometric path from four fisheye cameras to a
//! scored detection report:
//!
//! 1. **camera** – parametric fisheye model (equidistant base + odd
//!    polynomial), projection/unprojection, rectification, and the
//!    ground-plane homography of each camera.
//! 2. **bev** – metric bird's-eye-view raster spec and the deterministic
//!    four-camera stitcher.
//! 3. **geometry** – four-corner slot polygons: exact convex IoU, analytic
//!    IoU gradients, and class-aware polygon NMS.
//! 4. **loss** – the composite detection loss (polygon-IoU + BCE +
//!    objectness) with verified gradients.
//! 5. **scene** – deterministic synthetic parking-lot generator and the
//!    ground-texture / fisheye renderers used for end-to-end testing.
//! 6. **detector** – a classical marking-based slot detector implementing
//!    the pluggable `SlotDetector` interface.
//! 7. **eval** – class-aware matching, precision/recall/F1, AP@IoU and mAP
//!    reporting.
//! 8. **formats** – JSON/PPM file formats and atomic writes shared with the
//!    CLI.

pub mod bev;
pub mod camera;
pub mod detector;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod image;
pub mod loss;
pub mod pipeline;
pub mod scene;

pub use bev::{apply_homography, synthesize_bev, BevError, BevSpec};
pub use camera::{CameraError, CameraExtrinsics, CameraId, CameraRig, FisheyeCamera, FisheyeIntrinsics};
pub use detector::{detect, DetectorConfig, SlotDetector};
pub use eval::{average_precision, evaluate, match_detections, EvalReport};
pub use geometry::{
    convex_intersection, polygon_area, polygon_iou, polygon_iou_grad, polygon_nms, validate_slot,
    Detection, GeometryError, SlotClass, SlotPolygon, Unit,
};
pub use image::{Image, ImageError};
pub use loss::{loss_bce, loss_polygon_iou, loss_total, ClassProbs, LossBreakdown, PredictionTarget};
pub use scene::{generate_layout, render_fisheye_views, render_ground_texture, LayoutKind, LotLayout};
