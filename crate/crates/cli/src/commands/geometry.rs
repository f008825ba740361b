use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use fusebench_core::geometry::{
    extract_traits, rubber_sheet, split_subimages, Crop, CropSpec, FaceKeypoints, IrisCircles, Point,
};
use fusebench_core::pgm::{read_mask_pgm, read_pgm, write_mask_pgm, write_pgm};
use fusebench_core::GrayImageF64;
use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::config::{read_text, write_file, Settings};
use crate::output::{to_json, GEOMETRY_SCHEMA};

fn read_image(path: &Path) -> anyhow::Result<GrayImageF64> {
    let bytes = fs::read(path).with_context(|| format!("reading `{}`", path.display()))?;
    read_pgm(&bytes).with_context(|| format!("image `{}`", path.display()))
}

#[derive(Serialize)]
struct CropJson {
    center: Point<f64>,
    width: usize,
    height: usize,
    clipped_fraction: f64,
}

fn crop_json(spec: &CropSpec<f64>, c: &Crop<f64>) -> CropJson {
    CropJson {
        center: spec.center,
        width: spec.width,
        height: spec.height,
        clipped_fraction: c.clipped_fraction,
    }
}

#[derive(Serialize)]
struct ExtractJson {
    schema: &'static str,
    angle_rad: f64,
    keypoints: FaceKeypoints<f64>,
    crops: BTreeMap<&'static str, CropJson>,
}

/// Writes `face.pgm`, `face_mask.pgm`, `periocular.pgm`, `nose.pgm`,
/// `eyebrow.pgm` and `geometry.json` under the output directory.
pub fn extract(s: &Settings, image: &Path, keypoints: &Path) -> anyhow::Result<Outcome> {
    let img = read_image(image)?;
    let kp: FaceKeypoints<f64> = serde_json::from_str(&read_text(keypoints)?)
        .with_context(|| format!("keypoints `{}`", keypoints.display()))?;
    let r = extract_traits(&img, &kp, &s.crop)?;
    let specs = s.crop.specs(&r.face.keypoints);
    let out = &s.out;
    write_file(&out.join("face.pgm"), write_pgm(&r.face.image))?;
    write_file(&out.join("face_mask.pgm"), write_mask_pgm(&r.face.mask))?;
    let mut crops = BTreeMap::new();
    for (name, crop, spec) in [
        ("periocular", &r.periocular, &specs[0]),
        ("nose", &r.nose, &specs[1]),
        ("eyebrow", &r.eyebrow, &specs[2]),
    ] {
        write_file(&out.join(format!("{name}.pgm")), write_pgm(&crop.image))?;
        crops.insert(name, crop_json(spec, crop));
    }
    let json = ExtractJson {
        schema: GEOMETRY_SCHEMA,
        angle_rad: r.face.angle,
        keypoints: r.face.keypoints,
        crops,
    };
    write_file(&out.join("geometry.json"), to_json(&json))?;
    let clipped: Vec<String> = json
        .crops
        .iter()
        .filter(|(_, c)| c.clipped_fraction > 0.0)
        .map(|(n, c)| format!("{n} crop {:.1}% outside the image", 100.0 * c.clipped_fraction))
        .collect();
    Ok(Outcome::from_warnings(clipped))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CirclesJson {
    pupil_center: Point<f64>,
    pupil_radius: f64,
    iris_center: Point<f64>,
    iris_radius: f64,
}

#[derive(Serialize)]
struct IrisJson {
    schema: &'static str,
    rows: usize,
    cols: usize,
    valid_fraction: f64,
    mask_ratios: [f64; 4],
}

/// Writes `iris.pgm`, `iris_mask.pgm`, `iris_<k>.pgm`, `iris_mask_<k>.pgm`
/// (k = 0..3) and `iris.json` with the strip mask ratios.
pub fn iris(
    s: &Settings,
    image: &Path,
    circles: &Path,
    occlusion: Option<&Path>,
    rows: usize,
    cols: usize,
) -> anyhow::Result<Outcome> {
    let img = read_image(image)?;
    let c: CirclesJson = serde_json::from_str(&read_text(circles)?)
        .with_context(|| format!("circles `{}`", circles.display()))?;
    let occlusion = match occlusion {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("reading `{}`", p.display()))?;
            Some(read_mask_pgm(&bytes).with_context(|| format!("occlusion mask `{}`", p.display()))?)
        }
        None => None,
    };
    let circles = IrisCircles {
        pupil_center: c.pupil_center,
        pupil_radius: c.pupil_radius,
        iris_center: c.iris_center,
        iris_radius: c.iris_radius,
        occlusion,
    };
    let norm = rubber_sheet(&img, &circles, rows, cols)?;
    let strips = split_subimages(&norm)?;
    let out = &s.out;
    write_file(&out.join("iris.pgm"), write_pgm(&norm.rect))?;
    write_file(&out.join("iris_mask.pgm"), write_mask_pgm(&norm.mask))?;
    for k in 0..4 {
        write_file(&out.join(format!("iris_{k}.pgm")), write_pgm(&strips.rects[k]))?;
        write_file(&out.join(format!("iris_mask_{k}.pgm")), write_mask_pgm(&strips.masks[k]))?;
    }
    let json = IrisJson {
        schema: GEOMETRY_SCHEMA,
        rows,
        cols,
        valid_fraction: norm.mask.mean(),
        mask_ratios: strips.mask_ratios,
    };
    write_file(&out.join("iris.json"), to_json(&json))?;
    let warnings = if json.mask_ratios.iter().all(|&r| r == 0.0) {
        vec!["every iris strip is fully occluded".to_string()]
    } else {
        Vec::new()
    };
    Ok(Outcome::from_warnings(warnings))
}
