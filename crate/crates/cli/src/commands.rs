use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use wormline::detections::Detections;
use wormline::eval::{evaluate_masks, evaluate_skeletons, EvalMode, EvalReport};
use wormline::lossmap::{weight_map, WeightMapSidecar};
use wormline::pipeline::{
    detect_worms, label_image, masks_from_labels, overlay, reconstruct_masks, save_overlay, PipelineConfig,
};
use wormline::raster::{load_image, load_mask, load_prob_map, save_image, save_mask};
use wormline::synth::{generate, regenerate, write_corpus, Manifest, OverlapPolicy, SceneSpec};

use crate::Overrides;

pub fn load_config(path: Option<&Path>, o: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    macro_rules! apply {
        ($($flag:ident => $($field:ident).+;)*) => {
            $(if let Some(v) = o.$flag { cfg.$($field).+ = v; })*
        };
    }
    apply! {
        skeleton_threshold => skeleton_threshold;
        endpoint_threshold => endpoint_threshold;
        match_radius => untangle.match_radius;
        direction_window => untangle.direction_window;
        min_segment_len => untangle.min_segment_len;
        max_pair_angle => untangle.max_pair_angle;
        canny_sigma => canny.sigma;
        canny_low => canny.low;
        canny_high => canny.high;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn untangle(cfg: &PipelineConfig, skel: &Path, ep: &Path, out: &Path) -> Result<()> {
    let ps = load_prob_map(skel)?;
    let pe = load_prob_map(ep)?;
    let worms = detect_worms(&ps, &pe, cfg)?;
    log::info!("{}: {} worms", skel.display(), worms.len());
    create_parent(out)?;
    Detections::from_worms(file_name(skel), &worms).save(out)?;
    Ok(())
}

pub fn reconstruct(
    cfg: &PipelineConfig,
    image: &Path,
    detections: &Path,
    out: &Path,
    masks_dir: Option<&Path>,
    overlay_path: Option<&Path>,
) -> Result<()> {
    let img = load_image(image)?;
    let det = Detections::load(detections)?;
    det.check_bounds(img.width(), img.height())?;
    let worms = det.to_worms()?;
    let mut masks = reconstruct_masks(&img, &worms, &cfg.canny)?;
    // keep the ids from the detection file
    for (m, d) in masks.iter_mut().zip(&det.worms) {
        m.source = d.id;
    }
    create_parent(out)?;
    save_image(&label_image(&masks, img.width(), img.height())?, out)?;
    if let Some(dir) = masks_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for m in &masks {
            save_mask(&m.mask, dir.join(format!("worm_{:04}.png", m.source)))?;
        }
    }
    if let Some(path) = overlay_path {
        create_parent(path)?;
        save_overlay(&overlay(&img, &worms, &masks), path)?;
    }
    log::info!("{}: {} masks", image.display(), masks.len());
    Ok(())
}

fn eval_pair(cfg: &PipelineConfig, pred: &Path, gt: &Path, mode: EvalMode) -> Result<EvalReport> {
    let report = match mode {
        EvalMode::Skeleton => {
            let p = Detections::load(pred)?.paths();
            let g = Detections::load(gt)?.paths();
            evaluate_skeletons(&p, &g, cfg.eval_range, cfg.range_metric, &cfg.eval_thresholds)?
        }
        EvalMode::Mask => {
            let p: Vec<_> = masks_from_labels(&load_image(pred)?)?
                .into_iter()
                .map(|(_, m)| m)
                .collect();
            let g: Vec<_> = masks_from_labels(&load_image(gt)?)?
                .into_iter()
                .map(|(_, m)| m)
                .collect();
            evaluate_masks(&p, &g, &cfg.eval_thresholds)?
        }
    };
    Ok(report.with_image(&file_name(pred)))
}

/// Files with the mode's extension in `dir`, sorted by name.
fn list_inputs(dir: &Path, mode: EvalMode) -> Result<Vec<PathBuf>> {
    let ext = match mode {
        EvalMode::Skeleton => "json",
        EvalMode::Mask => "png",
    };
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    out.sort();
    Ok(out)
}

pub fn eval(cfg: &PipelineConfig, pred: &Path, gt: &Path, mode: EvalMode, json: Option<&Path>) -> Result<()> {
    let report = if pred.is_dir() && gt.is_dir() {
        let mut merged: Option<EvalReport> = None;
        for p in list_inputs(pred, mode)? {
            let g = gt.join(p.file_name().expect("listed file has a name"));
            if !g.exists() {
                return Err(wormline::Error::Format(format!("no ground truth for {}", p.display())).into());
            }
            let r = eval_pair(cfg, &p, &g, mode)?;
            match &mut merged {
                Some(m) => m.merge(r)?,
                None => merged = Some(r),
            }
        }
        match merged {
            Some(m) => m,
            None => bail!(wormline::Error::Empty("no prediction files to evaluate")),
        }
    } else {
        eval_pair(cfg, pred, gt, mode)?
    };
    print!("{}", report.to_table());
    if let Some(path) = json {
        create_parent(path)?;
        fs::write(path, serde_json::to_string_pretty(&report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn weightmap(gt: &Path, sigma: f64, gamma: f64, beta: f64, out: &Path) -> Result<()> {
    let mask = load_mask(gt)?;
    let w = weight_map(&mask, sigma)?;
    create_parent(out)?;
    w.save_png(out)?;
    let sidecar = out.with_extension("json");
    fs::write(
        &sidecar,
        serde_json::to_string_pretty(&WeightMapSidecar { sigma, gamma, beta })? + "\n",
    )
    .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory: the scene itself, or the corpus root with --count.
    #[arg(long, short)]
    out: PathBuf,
    /// Scene spec (JSON); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Regenerate every scene listed in a manifest.
    #[arg(long, conflicts_with_all = ["spec", "count"])]
    manifest: Option<PathBuf>,
    /// Write a corpus of this many scenes with seeds seed, seed+1, ….
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_worms: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Number of forced crossings; 0 keeps worms apart.
    #[arg(long, conflicts_with = "allow_overlap")]
    force_crossings: Option<usize>,
    /// Place worms independently, overlaps allowed.
    #[arg(long)]
    allow_overlap: bool,
    #[arg(long)]
    clutter_density: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    if let Some(m) = &args.manifest {
        return Ok(regenerate(&Manifest::load(m)?, &args.out)?);
    }
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(wormline::Error::from)?
        }
        None => SceneSpec::default(),
    };
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.n_worms {
        spec.n_worms = v;
    }
    if let Some(v) = args.width {
        spec.width = v;
    }
    if let Some(v) = args.height {
        spec.height = v;
    }
    if let Some(k) = args.force_crossings {
        spec.overlap = if k == 0 {
            OverlapPolicy::None
        } else {
            OverlapPolicy::ForceCrossings(k)
        };
    }
    if args.allow_overlap {
        spec.overlap = OverlapPolicy::Allow;
    }
    if let Some(v) = args.clutter_density {
        spec.clutter_density = v;
    }
    if let Some(v) = args.noise_sigma {
        spec.noise_sigma = v;
    }
    match args.count {
        Some(n) => {
            write_corpus(&spec, n, &args.out)?;
        }
        None => generate(&spec)?.write_to_dir(&args.out)?,
    }
    Ok(())
}

/// Reads `prob_skel.png`, `prob_ep.png` and `image.png` from `input` and
/// writes `detections.json`, `labels.png` (and `overlay.png`) to `out`.
pub fn pipeline_one(cfg: &PipelineConfig, input: &Path, out: &Path, with_overlay: bool) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let det = out.join("detections.json");
    untangle(cfg, &input.join("prob_skel.png"), &input.join("prob_ep.png"), &det)?;
    let ov = with_overlay.then(|| out.join("overlay.png"));
    reconstruct(
        cfg,
        &input.join("image.png"),
        &det,
        &out.join("labels.png"),
        None,
        ov.as_deref(),
    )
}

pub fn pipeline_batch(cfg: &PipelineConfig, input: &Path, out: &Path, jobs: usize, with_overlay: bool) -> Result<()> {
    let mut scenes: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("listing {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("prob_skel.png").is_file())
        .collect();
    scenes.sort();
    if scenes.is_empty() {
        bail!(wormline::Error::Empty("no scene directories with prob_skel.png"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let results: Vec<Result<()>> = pool.install(|| {
        scenes
            .par_iter()
            .map(|s| {
                let name = s.file_name().expect("listed directory has a name");
                log::info!("processing {}", s.display());
                pipeline_one(cfg, s, &out.join(name), with_overlay).with_context(|| format!("scene {}", s.display()))
            })
            .collect()
    });
    // report the first failure in input order
    results.into_iter().collect()
}
