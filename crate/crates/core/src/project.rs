//! Material label projection from per-view masks onto Gaussians.
//!
//! Each view rasterizes the cloud with the usual EWA splatting footprint;
//! every labeled pixel hands one vote to the front-most Gaussian that
//! dominates it, and votes are summed across views.

use rayon::prelude::*;

use crate::camera::CameraModel;
use crate::cloud::GaussianCloud;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Sym2};
use crate::material::{ClassId, MaterialMap, UNLABELED};
use crate::scalar::Real;
use crate::vote::VoteHistogram;

/// Isotropic term added to every projected covariance, in px².
pub const COVARIANCE_REGULARIZER: f64 = 0.3;
/// Per-splat alpha below which a splat does not touch a pixel at all.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;
pub const DEFAULT_ALPHA_THRESHOLD: f64 = 0.5;
/// Transmittance below which the max-weight fallback assigns the vote.
pub const FALLBACK_TRANSMITTANCE: f64 = 0.5;
pub const TILE_SIZE: u32 = 16;

/// One Gaussian as seen by one camera.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplatFootprint<T> {
    pub gaussian: u32,
    /// Pixel coordinates of the projected center.
    pub mean: [T; 2],
    /// Projected covariance including the regularizer, px².
    pub cov: Sym2<T>,
    /// Inverse of `cov`.
    pub conic: Sym2<T>,
    pub depth: T,
    pub opacity: T,
    /// Half extent in pixels beyond which alpha is below [`MIN_ALPHA`].
    /// Zero when the splat can never reach [`MIN_ALPHA`].
    pub radius: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ProjectionStats {
    pub input: usize,
    pub projected: usize,
    pub behind_camera: usize,
    pub outside_image: usize,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    /// Sorted front to back (depth, then Gaussian index).
    pub footprints: Vec<SplatFootprint<T>>,
    pub stats: ProjectionStats,
}

/// Perspective projection of the 3D covariance through the local affine
/// approximation of the pinhole map, without the regularizer.
pub fn projected_covariance<T: Real>(cov_world: &Mat3<T>, camera: &CameraModel<T>, p_cam: [T; 3]) -> Sym2<T> {
    let [x, y, z] = p_cam;
    let iz = T::one() / z;
    let iz2 = iz * iz;
    // rows of the 2×3 Jacobian of (fx x/z + cx, fy y/z + cy)
    let j0 = [camera.fx * iz, T::zero(), -camera.fx * x * iz2];
    let j1 = [T::zero(), camera.fy * iz, -camera.fy * y * iz2];
    let w = &camera.rotation;
    let sc = w.mul_mat(cov_world).mul_mat(&w.transpose());
    let quad = |a: &[T; 3], b: &[T; 3]| {
        let mut s = T::zero();
        for i in 0..3 {
            for k in 0..3 {
                s += a[i] * sc.m[i][k] * b[k];
            }
        }
        s
    };
    Sym2 {
        a: quad(&j0, &j0),
        b: quad(&j0, &j1),
        c: quad(&j1, &j1),
    }
}

/// Projects every splat into `camera`.
///
/// Splats with non-positive depth are dropped, as are footprints whose
/// center lies more than 3σ outside the image and splats whose projection
/// is non-finite. The result is sorted front to back.
pub fn project_splats<T: Real>(cloud: &GaussianCloud<T>, camera: &CameraModel<T>) -> Projection<T> {
    let reg = T::lit(COVARIANCE_REGULARIZER);
    let three = T::lit(3.0);
    let (w, h) = (T::lit(camera.width as f64), T::lit(camera.height as f64));
    let log_floor = T::lit(1.0 / MIN_ALPHA);
    let mut stats = ProjectionStats {
        input: cloud.len(),
        ..Default::default()
    };
    let mut footprints = Vec::with_capacity(cloud.len());
    for i in 0..cloud.len() {
        let pc = camera.world_to_camera(cloud.positions[i]);
        if !(pc.z > T::zero()) {
            stats.behind_camera += 1;
            continue;
        }
        let mean = [
            camera.fx * pc.x / pc.z + camera.cx,
            camera.fy * pc.y / pc.z + camera.cy,
        ];
        let mut cov = projected_covariance(&cloud.covariance(i), camera, [pc.x, pc.y, pc.z]);
        cov.a += reg;
        cov.c += reg;
        let conic = match cov.inverse() {
            Some(c) if mean[0].is_finite() && mean[1].is_finite() && c.a.is_finite() && c.c.is_finite() => c,
            _ => {
                stats.degenerate += 1;
                continue;
            }
        };
        let (lmin, lmax) = cov.eigenvalues();
        if !(lmin > T::zero()) {
            stats.degenerate += 1;
            continue;
        }
        let sigma = lmax.sqrt();
        let reach = three * sigma;
        if mean[0] < -reach || mean[0] > w + reach || mean[1] < -reach || mean[1] > h + reach {
            stats.outside_image += 1;
            continue;
        }
        let opacity = cloud.opacities[i];
        let radius = if opacity * log_floor > T::one() {
            // opacity·exp(-q/2) ≥ 1/255  ⇒  q ≤ 2 ln(255·opacity), and q ≥ |d|²/λmax
            (T::two() * (opacity * log_floor).ln() * lmax).sqrt() * T::lit(1.001) + T::one()
        } else {
            T::zero()
        };
        footprints.push(SplatFootprint {
            gaussian: i as u32,
            mean,
            cov,
            conic,
            depth: pc.z,
            opacity,
            radius,
        });
    }
    sort_front_to_back(&mut footprints);
    stats.projected = footprints.len();
    Projection { footprints, stats }
}

pub fn sort_front_to_back<T: Real>(footprints: &mut [SplatFootprint<T>]) {
    footprints.sort_by(|a, b| {
        a.depth
            .partial_cmp(&b.depth)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.gaussian.cmp(&b.gaussian))
    });
}

/// Winner of one pixel among depth-sorted `candidates` (indices into
/// `footprints`). Returns the footprint index.
#[inline]
fn resolve_pixel<T: Real>(
    footprints: &[SplatFootprint<T>],
    candidates: impl Iterator<Item = usize>,
    px: T,
    py: T,
    threshold: T,
) -> Option<usize> {
    let min_alpha = T::lit(MIN_ALPHA);
    let mut transmittance = T::one();
    let mut best: Option<(usize, T)> = None;
    for k in candidates {
        let f = &footprints[k];
        let dx = px - f.mean[0];
        let dy = py - f.mean[1];
        let alpha = f.opacity * (-T::half() * f.conic.quad_form(dx, dy)).exp();
        if alpha < min_alpha {
            continue;
        }
        if alpha >= threshold {
            return Some(k);
        }
        let weight = alpha * transmittance;
        if best.is_none_or(|(_, bw)| weight > bw) {
            best = Some((k, weight));
        }
        transmittance *= T::one() - alpha;
    }
    if transmittance < T::lit(FALLBACK_TRANSMITTANCE) {
        best.map(|(k, _)| k)
    } else {
        None
    }
}

/// Per-pixel outcome of rasterizing one view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewVotes {
    pub width: u32,
    pub height: u32,
    /// Gaussian that received the pixel's vote, row-major.
    pub winners: Vec<Option<u32>>,
    /// The mask label each winner voted for.
    pub labels: Vec<ClassId>,
}

impl ViewVotes {
    /// `(gaussian, class)` for every cast vote, in pixel order.
    pub fn votes(&self) -> impl Iterator<Item = (u32, ClassId)> + '_ {
        self.winners
            .iter()
            .zip(&self.labels)
            .filter_map(|(w, &c)| w.map(|g| (g, c)))
    }

    pub fn vote_count(&self) -> usize {
        self.winners.iter().filter(|w| w.is_some()).count()
    }

    /// Image of the aggregated label of each pixel's winning Gaussian.
    pub fn winner_label_image(&self, labels: &[ClassId]) -> Vec<ClassId> {
        self.winners
            .iter()
            .map(|w| w.map_or(UNLABELED, |g| labels[g as usize]))
            .collect()
    }
}

fn check_footprints<T: Real>(footprints: &[SplatFootprint<T>]) -> Result<()> {
    if let Some(f) = footprints.iter().find(|f| {
        !(f.conic.a > T::zero() && f.conic.determinant() > T::zero())
    }) {
        return Err(Error::Internal(format!(
            "footprint of gaussian {} is not positive definite",
            f.gaussian
        )));
    }
    if footprints.windows(2).any(|w| w[0].depth > w[1].depth) {
        return Err(Error::Input("footprints are not sorted front to back".into()));
    }
    Ok(())
}

/// Tiled rasterization of one view's votes.
///
/// Footprints must be sorted front to back (as returned by
/// [`project_splats`]). Only pixels with a label cast votes.
pub fn rasterize_votes<T: Real>(
    footprints: &[SplatFootprint<T>],
    mask: &MaterialMap,
    alpha_threshold: T,
) -> Result<ViewVotes> {
    check_footprints(footprints)?;
    let (w, h) = (mask.width, mask.height);
    let tiles_x = w.div_ceil(TILE_SIZE);
    let tiles_y = h.div_ceil(TILE_SIZE);
    let tile_count = (tiles_x * tiles_y) as usize;

    // tile → footprint indices, in front-to-back order
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tile_count];
    for (k, f) in footprints.iter().enumerate() {
        if !(f.radius > T::zero()) {
            continue;
        }
        let x0 = (f.mean[0] - f.radius).floor().to_f64_lossy().max(0.0);
        let x1 = (f.mean[0] + f.radius).ceil().to_f64_lossy().min(w as f64 - 1.0);
        let y0 = (f.mean[1] - f.radius).floor().to_f64_lossy().max(0.0);
        let y1 = (f.mean[1] + f.radius).ceil().to_f64_lossy().min(h as f64 - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        let (tx0, tx1) = (x0 as u32 / TILE_SIZE, x1 as u32 / TILE_SIZE);
        let (ty0, ty1) = (y0 as u32 / TILE_SIZE, y1 as u32 / TILE_SIZE);
        for ty in ty0..=ty1 {
            for tx in tx0..=tx1 {
                bins[(ty * tiles_x + tx) as usize].push(k as u32);
            }
        }
    }

    let half = T::half();
    let per_tile: Vec<Vec<(usize, u32)>> = (0..tile_count)
        .into_par_iter()
        .map(|t| {
            let (tx, ty) = (t as u32 % tiles_x, t as u32 / tiles_x);
            let list = &bins[t];
            let mut hits = Vec::new();
            if list.is_empty() {
                return hits;
            }
            for y in ty * TILE_SIZE..((ty + 1) * TILE_SIZE).min(h) {
                for x in tx * TILE_SIZE..((tx + 1) * TILE_SIZE).min(w) {
                    let p = y as usize * w as usize + x as usize;
                    if mask.classes[p] == UNLABELED {
                        continue;
                    }
                    let px = T::lit(x as f64) + half;
                    let py = T::lit(y as f64) + half;
                    if let Some(k) =
                        resolve_pixel(footprints, list.iter().map(|&k| k as usize), px, py, alpha_threshold)
                    {
                        hits.push((p, footprints[k].gaussian));
                    }
                }
            }
            hits
        })
        .collect();

    let mut winners = vec![None; mask.pixel_count()];
    for (p, g) in per_tile.into_iter().flatten() {
        winners[p] = Some(g);
    }
    Ok(ViewVotes {
        width: w,
        height: h,
        winners,
        labels: mask.classes.clone(),
    })
}

/// Per-Gaussian vote histograms accumulated over views.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GaussianVotes {
    pub histograms: Vec<VoteHistogram>,
}

impl GaussianVotes {
    pub fn new(gaussians: usize) -> Self {
        Self {
            histograms: vec![VoteHistogram::new(); gaussians],
        }
    }

    pub fn add_view(&mut self, view: &ViewVotes) {
        for (g, c) in view.votes() {
            self.histograms[g as usize].add(c);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.histograms.iter_mut().zip(&other.histograms) {
            a.merge(b);
        }
    }

    pub fn total(&self) -> u64 {
        self.histograms.iter().map(VoteHistogram::total).sum()
    }
}

/// Majority class per Gaussian; ties → lowest ID, no votes → [`UNLABELED`].
pub fn aggregate_labels(votes: &GaussianVotes) -> Vec<ClassId> {
    votes.histograms.par_iter().map(VoteHistogram::majority).collect()
}

/// Outcome of projecting all views.
#[derive(Clone, Debug)]
pub struct LabelProjection {
    pub votes: GaussianVotes,
    pub labels: Vec<ClassId>,
    pub views: Vec<ViewVotes>,
    pub stats: Vec<ProjectionStats>,
}

/// Projects and rasterizes every `(camera, mask)` pair, sums the votes and
/// takes the per-Gaussian majority.
pub fn project_labels<T: Real>(
    cloud: &GaussianCloud<T>,
    views: &[(CameraModel<T>, MaterialMap)],
    alpha_threshold: T,
) -> Result<LabelProjection> {
    if cloud.is_empty() {
        return Err(Error::Input("gaussian cloud is empty".into()));
    }
    let per_view: Vec<(ViewVotes, ProjectionStats)> = views
        .par_iter()
        .map(|(cam, mask)| {
            if (cam.width, cam.height) != (mask.width, mask.height) {
                return Err(Error::Shape(format!(
                    "mask for `{}` is {}x{}, camera is {}x{}",
                    cam.id, mask.width, mask.height, cam.width, cam.height
                )));
            }
            let proj = project_splats(cloud, cam);
            let v = rasterize_votes(&proj.footprints, mask, alpha_threshold)?;
            Ok((v, proj.stats))
        })
        .collect::<Result<_>>()?;
    let mut votes = GaussianVotes::new(cloud.len());
    let mut views_out = Vec::with_capacity(per_view.len());
    let mut stats = Vec::with_capacity(per_view.len());
    for (v, s) in per_view {
        votes.add_view(&v);
        views_out.push(v);
        stats.push(s);
    }
    let labels = aggregate_labels(&votes);
    Ok(LabelProjection {
        votes,
        labels,
        views: views_out,
        stats,
    })
}
