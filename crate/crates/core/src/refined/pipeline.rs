use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::climb::{hill_climb, HillClimbOptions};
use super::raster::{rasterize, PixelAssignment};
use super::render::{render_images, RefinedImageSet};
use crate::dataio::FeatureTable;
use crate::distances::{
    embedding_distances, estimate_precisions, pairwise_euclidean, DistanceMatrix, FusedDistance, FusionMode,
    PrecisionOptions,
};
use crate::evaluation::kendall_tau_distances;
use crate::instrument::Counters;
use crate::projections::{
    bmds_sample, classical_mds, fit_into_unit_square, isomap, laplacian_eigenmaps, lle, normalize_to_unit_square,
    smacof_refine, BmdsModel, BmdsOptions, Embedding, HeatKernel, SmacofOptions,
};
use crate::{Error, Result};

/// One planar embedding method and its settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ProjectionSpec {
    Mds,
    Isomap {
        k: usize,
    },
    Lle {
        k: usize,
    },
    Le {
        k: usize,
        #[serde(default)]
        heat: HeatKernel,
    },
}

impl ProjectionSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            ProjectionSpec::Mds => "mds",
            ProjectionSpec::Isomap { .. } => "isomap",
            ProjectionSpec::Lle { .. } => "lle",
            ProjectionSpec::Le { .. } => "le",
        }
    }

    /// Embeds the feature columns of `t`; `ambient` holds their Euclidean distances.
    pub fn embed(&self, t: &FeatureTable, ambient: &DistanceMatrix) -> Result<Embedding> {
        match *self {
            ProjectionSpec::Mds => classical_mds(ambient),
            ProjectionSpec::Isomap { k } => isomap(ambient, k),
            ProjectionSpec::Lle { k } => lle(t, k),
            ProjectionSpec::Le { k, heat } => laplacian_eigenmaps(ambient, k, heat),
        }
    }
}

/// Which distances enter the fusion for each projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceSource {
    /// Euclidean distances of the features in sample space (identical for every projection).
    Ambient,
    /// Distances between the projected 2D coordinates.
    #[default]
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmdsLayout {
    pub iters: usize,
    pub burn_in: usize,
    pub step: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

/// How the planar layout is obtained from the target distances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Layout {
    /// Classical MDS of the target refined by SMACOF.
    #[default]
    Smacof,
    /// Posterior mean of the Bayesian MDS sampler (truncated-normal model for
    /// arithmetic fusion and single projections, log-normal for geometric).
    Bmds(BmdsLayout),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineOptions {
    /// `None` uses the smallest square grid.
    pub grid_size: Option<usize>,
    pub hill_climb: HillClimbOptions,
    pub distance_source: DistanceSource,
    /// Rescale every distance matrix to unit mean off-diagonal entry first.
    pub rescale: bool,
    pub precision: PrecisionOptions,
    pub smacof: SmacofOptions,
    pub layout: Layout,
    /// Intensity of cells without a feature.
    pub fill: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            grid_size: None,
            hill_climb: HillClimbOptions::default(),
            distance_source: DistanceSource::default(),
            rescale: true,
            precision: PrecisionOptions::default(),
            smacof: SmacofOptions::default(),
            layout: Layout::default(),
            fill: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub method_tag: String,
    pub projections: Vec<String>,
    pub distance_source: DistanceSource,
    pub fusion_mode: Option<FusionMode>,
    /// Estimated variance per projection (empty for a single projection).
    pub sigma2: Vec<f64>,
    pub precision_iterations: usize,
    pub precision_converged: bool,
    /// Raw stress of the layout against the target distances.
    pub layout_stress: f64,
    pub grid_size: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub sweeps: usize,
    pub moves: usize,
}

#[derive(Debug, Clone)]
pub struct RefinedOutput {
    pub images: RefinedImageSet,
    /// Distances the layout and hill climbing fit.
    pub target: DistanceMatrix,
    pub embeddings: Vec<Embedding>,
    pub fused: Option<FusedDistance>,
    pub report: PipelineReport,
}

fn projection_matrices(
    layout: &FeatureTable,
    specs: &[ProjectionSpec],
    opts: &PipelineOptions,
    counters: &Counters,
) -> Result<(Vec<Embedding>, Vec<DistanceMatrix>)> {
    layout.validate_for_embedding()?;
    let ambient = pairwise_euclidean(layout)?;
    let embeddings: Vec<Embedding> = specs
        .par_iter()
        .map(|s| {
            let e = s.embed(layout, &ambient);
            counters.add_projection();
            e
        })
        .collect::<Result<_>>()?;
    let ds = embeddings
        .iter()
        .map(|e| {
            let d = match opts.distance_source {
                DistanceSource::Ambient => ambient.clone(),
                DistanceSource::Projection => embedding_distances(e)?,
            };
            Ok(if opts.rescale { d.rescaled_unit_mean() } else { d })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((embeddings, ds))
}

struct Placed {
    assignment: PixelAssignment,
    layout_stress: f64,
    initial_cost: f64,
    final_cost: f64,
    sweeps: usize,
    moves: usize,
}

fn place(
    target: &DistanceMatrix,
    observed: &[DistanceMatrix],
    model: BmdsModel,
    opts: &PipelineOptions,
    counters: &Counters,
) -> Result<Placed> {
    let init = classical_mds(target)?;
    let (planar, layout_stress) = match opts.layout {
        Layout::Smacof => {
            let fit = smacof_refine(target, &init, opts.smacof)?;
            let stress = *fit.stress_trace.last().expect("trace has the initial stress");
            (fit.embedding, stress)
        }
        Layout::Bmds(b) => {
            let start = fit_into_unit_square(&init, 0.05);
            let scale = embedding_distances(&start)?.mean_off_diagonal() / target.mean_off_diagonal();
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Error::Numerical("cannot scale distances into the unit square".into()));
            }
            let scaled: Vec<DistanceMatrix> = observed.iter().map(|d| d.scaled(scale)).collect();
            let bo = BmdsOptions {
                model,
                alpha: b.alpha,
                beta: b.beta,
                iters: b.iters,
                burn_in: b.burn_in,
                step: b.step,
                adapt_step: true,
                seed: b.seed,
            };
            let out = bmds_sample(&scaled, &start, &bo)?;
            let e = out.embedding;
            let stress = crate::projections::raw_stress(&target.scaled(scale), e.coords());
            (e, stress)
        }
    };
    let assignment = rasterize(&normalize_to_unit_square(&planar), opts.grid_size)?;
    let climbed = hill_climb(&assignment, target, opts.hill_climb)?;
    counters.add_hill_climb();
    Ok(Placed {
        assignment: climbed.assignment,
        layout_stress,
        initial_cost: climbed.cost_trace[0],
        final_cost: *climbed.cost_trace.last().expect("non-empty trace"),
        sweeps: climbed.sweeps,
        moves: climbed.moves,
    })
}

/// Single-projection REFINED: embeds the features of `layout` with `spec`,
/// fits a pixel assignment to that projection's distances, and renders every
/// sample of `render` (already normalized to `[0, 1]`).
pub fn refined_pipeline(
    layout: &FeatureTable,
    render: &FeatureTable,
    spec: ProjectionSpec,
    opts: &PipelineOptions,
    counters: &Counters,
) -> Result<RefinedOutput> {
    let (embeddings, ds) = projection_matrices(layout, &[spec], opts, counters)?;
    let target = ds[0].clone();
    let placed = place(&target, &ds, BmdsModel::TruncatedNormal, opts, counters)?;
    let tag = format!("refined_{}", spec.tag());
    let images = render_images(&placed.assignment, render, opts.fill, &tag)?;
    Ok(RefinedOutput {
        report: PipelineReport {
            method_tag: tag,
            projections: vec![spec.tag().to_string()],
            distance_source: opts.distance_source,
            fusion_mode: None,
            sigma2: Vec::new(),
            precision_iterations: 0,
            precision_converged: true,
            layout_stress: placed.layout_stress,
            grid_size: placed.assignment.grid_size(),
            initial_cost: placed.initial_cost,
            final_cost: placed.final_cost,
            sweeps: placed.sweeps,
            moves: placed.moves,
        },
        images,
        target,
        embeddings,
        fused: None,
    })
}

/// Integrated REFINED: runs every projection, fuses their distance matrices
/// with estimated precision weights, and builds one pixel assignment and one
/// image set from the fused matrix.
pub fn irefined_pipeline(
    layout: &FeatureTable,
    render: &FeatureTable,
    specs: &[ProjectionSpec],
    mode: FusionMode,
    opts: &PipelineOptions,
    counters: &Counters,
) -> Result<RefinedOutput> {
    if specs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "integrated REFINED needs at least 2 projections, got {}",
            specs.len()
        )));
    }
    let (embeddings, ds) = projection_matrices(layout, specs, opts, counters)?;
    let est = estimate_precisions(&ds, mode, opts.precision)?;
    let target = est.fused.d_bar.clone();
    let model = match mode {
        FusionMode::Arithmetic => BmdsModel::TruncatedNormal,
        FusionMode::Geometric => BmdsModel::LogNormal,
    };
    let placed = place(&target, &ds, model, opts, counters)?;
    let tag = format!("irefined_{}", mode.as_str());
    let images = render_images(&placed.assignment, render, opts.fill, &tag)?;
    Ok(RefinedOutput {
        report: PipelineReport {
            method_tag: tag,
            projections: specs.iter().map(|s| s.tag().to_string()).collect(),
            distance_source: opts.distance_source,
            fusion_mode: Some(mode),
            sigma2: est.weights.sigma2().to_vec(),
            precision_iterations: est.iterations,
            precision_converged: est.converged,
            layout_stress: placed.layout_stress,
            grid_size: placed.assignment.grid_size(),
            initial_cost: placed.initial_cost,
            final_cost: placed.final_cost,
            sweeps: placed.sweeps,
            moves: placed.moves,
        },
        images,
        target,
        embeddings,
        fused: Some(est.fused),
    })
}

/// Kendall's tau between the pairwise cell distances of two assignments of
/// the same features.
pub fn assignment_tau(a: &PixelAssignment, b: &PixelAssignment) -> Result<f64> {
    kendall_tau_distances(&a.cell_distances()?, &b.cell_distances()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(n: usize, p: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let latent: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let values = DMatrix::from_fn(n, p, |i, j| {
            let w = j as f64 / p as f64;
            let v = latent[i][0] * (1.0 - w) + latent[i][1] * w + 0.3 * latent[i][2] * (6.0 * w).sin();
            v + 0.05 * ((i * 31 + j * 17) % 13) as f64 / 13.0
        });
        let t = FeatureTable::new(
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..p).map(|j| format!("f{j}")).collect(),
            values,
            vec![0.0; n],
        )
        .unwrap();
        crate::dataio::normalize_features(
            &t,
            crate::dataio::NormalizationMode::Minmax01,
            &(0..n).collect::<Vec<_>>(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn identical_projections_reduce_to_single_refined() {
        let t = synthetic(30, 16, 1);
        let opts = PipelineOptions::default();
        let single = refined_pipeline(&t, &t, ProjectionSpec::Mds, &opts, &Counters::new()).unwrap();
        for mode in [FusionMode::Arithmetic, FusionMode::Geometric] {
            let fused = irefined_pipeline(&t, &t, &[ProjectionSpec::Mds; 3], mode, &opts, &Counters::new()).unwrap();
            assert_eq!(fused.target, single.target);
            assert_eq!(fused.images.assignment(), single.images.assignment());
            assert_eq!(fused.images.images(), single.images.images());
        }
    }

    #[test]
    fn four_projections_one_hill_climb() {
        let t = synthetic(40, 50, 2);
        let counters = Counters::new();
        let specs = [
            ProjectionSpec::Mds,
            ProjectionSpec::Isomap { k: 8 },
            ProjectionSpec::Lle { k: 8 },
            ProjectionSpec::Le {
                k: 8,
                heat: HeatKernel::Median,
            },
        ];
        let a = irefined_pipeline(
            &t,
            &t,
            &specs,
            FusionMode::Arithmetic,
            &PipelineOptions::default(),
            &counters,
        )
        .unwrap();
        let snap = counters.snapshot();
        assert_eq!(snap.projections_run, 4);
        assert_eq!(snap.hill_climbs_run, 1);
        assert_eq!(a.images.len(), 40);
        assert_eq!(a.images.grid_size(), 8);
        assert_eq!(a.report.method_tag, "irefined_arithmetic");
        assert!(a.report.final_cost <= a.report.initial_cost);

        let g = irefined_pipeline(
            &t,
            &t,
            &specs,
            FusionMode::Geometric,
            &PipelineOptions::default(),
            &counters,
        )
        .unwrap();
        assert_eq!(g.report.method_tag, "irefined_geometric");
        let tau = assignment_tau(a.images.assignment(), g.images.assignment()).unwrap();
        assert!((-1.0..=1.0).contains(&tau));
    }

    #[test]
    fn single_projection_is_rejected_for_fusion() {
        let t = synthetic(10, 8, 3);
        let err = irefined_pipeline(
            &t,
            &t,
            &[ProjectionSpec::Mds],
            FusionMode::Arithmetic,
            &PipelineOptions::default(),
            &Counters::new(),
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bmds_layout_runs() {
        let t = synthetic(20, 9, 4);
        let opts = PipelineOptions {
            layout: Layout::Bmds(BmdsLayout {
                iters: 300,
                burn_in: 100,
                step: 0.02,
                alpha: 3.0,
                beta: 1e-3,
                seed: 5,
            }),
            ..Default::default()
        };
        let out = irefined_pipeline(
            &t,
            &t,
            &[ProjectionSpec::Mds, ProjectionSpec::Isomap { k: 4 }],
            FusionMode::Geometric,
            &opts,
            &Counters::new(),
        )
        .unwrap();
        assert_eq!(out.images.grid_size(), 3);
    }

    #[test]
    fn options_round_trip_through_json() {
        let opts = PipelineOptions {
            grid_size: Some(5),
            layout: Layout::Bmds(BmdsLayout {
                iters: 10,
                burn_in: 5,
                step: 0.1,
                alpha: 3.0,
                beta: 0.1,
                seed: 1,
            }),
            ..Default::default()
        };
        let s = serde_json::to_string(&opts).unwrap();
        assert_eq!(serde_json::from_str::<PipelineOptions>(&s).unwrap(), opts);
        let spec: ProjectionSpec = serde_json::from_str(r#"{"method": "le", "k": 5, "heat": "binary"}"#).unwrap();
        assert_eq!(
            spec,
            ProjectionSpec::Le {
                k: 5,
                heat: HeatKernel::Binary
            }
        );
    }
}
