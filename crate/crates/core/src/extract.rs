//! Pole extraction: intensity threshold, Euclidean clustering, line fit.

use std::collections::{BTreeMap, HashMap};

use nalgebra::SymmetricEigen;
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::geometry::{point_to_line_distance, GeometryError, Line3, Mat3, Vec3};

/// Threshold used when the manufacturer is unknown.
pub const DEFAULT_THRESHOLD: f64 = 200.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("no returns at or above intensity {threshold}")]
    NoRetroReflectiveReturns { threshold: f64 },
    #[error("found {found} pole-like clusters, need 2")]
    TooFewClusters { found: usize },
    #[error("the two poles are parallel (|dot| = {dot})")]
    ParallelPoles { dot: f64 },
    #[error("cannot fit a line: {0}")]
    DegenerateFit(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Intensity thresholds per LiDAR manufacturer, for returns at about 5 m.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable {
    entries: BTreeMap<String, f64>,
}

impl Default for ThresholdTable {
    fn default() -> Self {
        let entries = [
            ("Velodyne", 230.0),
            ("Hesai", 200.0),
            ("Leishen", 200.0),
            ("RoboSense", 200.0),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { entries }
    }
}

impl ThresholdTable {
    pub fn insert(&mut self, manufacturer: &str, threshold: f64) -> Result<(), ExtractError> {
        check_threshold(threshold)?;
        self.entries.insert(manufacturer.to_string(), threshold);
        Ok(())
    }

    /// Case-insensitive lookup, falling back to [`DEFAULT_THRESHOLD`].
    pub fn threshold_for(&self, manufacturer: &str) -> f64 {
        self.entries
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(manufacturer))
            .map(|(_, v)| *v)
            .unwrap_or(DEFAULT_THRESHOLD)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn check_threshold(t: f64) -> Result<(), ExtractError> {
    if !(0.0..=255.0).contains(&t) {
        return Err(ExtractError::InvalidParameter(format!(
            "intensity threshold {t} outside [0, 255]"
        )));
    }
    Ok(())
}

/// Sub-cloud with intensity ≥ `threshold`, in input order.
pub fn filter_by_intensity(cloud: &PointCloud, threshold: f64) -> Result<PointCloud, ExtractError> {
    check_threshold(threshold)?;
    let idx: Vec<usize> = cloud
        .intensities()
        .iter()
        .enumerate()
        .filter(|(_, &i)| i >= threshold)
        .map(|(k, _)| k)
        .collect();
    if idx.is_empty() {
        return Err(ExtractError::NoRetroReflectiveReturns { threshold });
    }
    Ok(cloud.select(&idx))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    /// Ascending indices into the clustered cloud.
    pub indices: Vec<usize>,
    pub centroid: Vec3,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so the result does not depend on visit order.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clustering: points closer than `eps` are connected.
/// Components with fewer than `min_points` members are dropped. Sorted by
/// size descending, ties by smallest member index.
pub fn cluster_points(
    cloud: &PointCloud,
    eps: f64,
    min_points: usize,
) -> Result<Vec<Cluster>, ExtractError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(ExtractError::InvalidParameter(format!(
            "cluster eps must be positive, got {eps}"
        )));
    }
    if min_points < 2 {
        return Err(ExtractError::InvalidParameter(format!(
            "min_points must be at least 2, got {min_points}"
        )));
    }
    let pts = cloud.points();
    let cell = |p: &Vec3| -> [i64; 3] { [0, 1, 2].map(|k| (p[k] / eps).floor() as i64) };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let eps2 = eps * eps;
    let mut sets = DisjointSet::new(pts.len());
    for (i, p) in pts.iter().enumerate() {
        let c = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in bucket {
                        if j > i && (pts[j] - p).norm_squared() < eps2 {
                            sets.union(i, j);
                        }
                    }
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..pts.len() {
        let r = sets.find(i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .filter(|g| g.len() >= min_points)
        .map(|indices| {
            let centroid =
                indices.iter().map(|&i| pts[i]).sum::<Vec3>() / indices.len() as f64;
            Cluster { indices, centroid }
        })
        .collect();
    clusters.sort_by(|a, b| {
        b.indices
            .len()
            .cmp(&a.indices.len())
            .then(a.indices[0].cmp(&b.indices[0]))
    });
    Ok(clusters)
}

/// Total-least-squares line: centroid plus principal axis. Returns the line
/// and the RMS orthogonal residual.
pub fn fit_line(points: &[Vec3]) -> Result<(Line3, f64), ExtractError> {
    if points.len() < 2 {
        return Err(ExtractError::DegenerateFit(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vec3>() / n;
    let scatter = points.iter().fold(Mat3::zeros(), |acc, p| {
        let d = p - centroid;
        acc + d * d.transpose()
    });
    let eig = SymmetricEigen::new(scatter);
    let (k, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("3 eigenvalues");
    let spread = points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max);
    if !(lambda > 0.0) || spread <= 1e-12 * (1.0 + centroid.norm()) {
        return Err(ExtractError::DegenerateFit("all points coincide".into()));
    }
    let line = Line3::new(centroid, eig.eigenvectors.column(k).into_owned())?;
    let rms = (points
        .iter()
        .map(|p| point_to_line_distance(p, &line).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((line, rms))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedPole {
    pub line: Line3,
    pub inlier_count: usize,
    pub rms_residual: f64,
    /// Extent of the members along the fitted direction.
    pub z_span: f64,
    /// Member points, in the sensor frame.
    pub points: Vec<Vec3>,
}

impl FittedPole {
    pub fn from_points(points: Vec<Vec3>) -> Result<Self, ExtractError> {
        let (line, rms_residual) = fit_line(&points)?;
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let s = (p - line.anchor()).dot(line.direction());
            (lo.min(s), hi.max(s))
        });
        Ok(Self {
            line,
            inlier_count: points.len(),
            rms_residual,
            z_span: hi - lo,
            points,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractParams {
    pub threshold: f64,
    pub eps: f64,
    pub min_points: usize,
    /// Nominal pole radius; clusters whose fit residual exceeds three radii
    /// are not treated as poles.
    pub pole_radius: f64,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            eps: 0.3,
            min_points: 5,
            pole_radius: 0.02,
        }
    }
}

/// Threshold, cluster, and fit the two largest pole-like clusters.
pub fn extract_poles(
    cloud: &PointCloud,
    params: &ExtractParams,
) -> Result<[FittedPole; 2], ExtractError> {
    if !(params.pole_radius > 0.0) {
        return Err(ExtractError::InvalidParameter(format!(
            "pole radius must be positive, got {}",
            params.pole_radius
        )));
    }
    let bright = filter_by_intensity(cloud, params.threshold)?;
    let clusters = cluster_points(&bright, params.eps, params.min_points)?;
    let mut poles = Vec::with_capacity(2);
    for c in &clusters {
        let pts: Vec<Vec3> = c.indices.iter().map(|&i| bright.points()[i]).collect();
        let Ok(pole) = FittedPole::from_points(pts) else {
            continue;
        };
        if pole.rms_residual <= 3.0 * params.pole_radius {
            poles.push(pole);
            if poles.len() == 2 {
                break;
            }
        }
    }
    let found = poles.len();
    let [a, b]: [FittedPole; 2] = poles
        .try_into()
        .map_err(|_| ExtractError::TooFewClusters { found })?;
    let dot = a.line.direction().dot(b.line.direction()).abs();
    if dot >= 1.0 - 1e-6 {
        return Err(ExtractError::ParallelPoles { dot });
    }
    Ok([a, b])
}
