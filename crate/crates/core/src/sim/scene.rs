use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloud::PointCloud;
use crate::geometry::{RigidTransform, Vec3};

use super::{
    canonicalize_pole_frame, march_beam_points, tilted_scan_normal, LidarModel, PoleSpec, SimError,
};

/// Sensor orientation `[w, x, y, z]` used for the axis-fit error study.
pub const REFERENCE_Q1: [f64; 4] = [0.957, -0.120, 0.263, -0.013];
/// Upright sensor.
pub const REFERENCE_Q2: [f64; 4] = [1.0, 0.0, 0.0, 0.0];

const LIDAR_POSITIONS: [[f64; 3]; 2] = [[1.0, -1.0, 0.0], [1.0, 1.0, 0.0]];
const LIDAR_QUATERNIONS: [[f64; 4]; 2] = [[0.988, 0.094, 0.079, 0.094], [0.989, -0.079, -0.094, -0.079]];

const DEFAULT_RADIUS: f64 = 0.02;
const DEFAULT_Z_EXTENT: [f64; 2] = [-1.0, 1.5];
const GROUND_Z: f64 = -1.0;
const REFLECTIVE_INTENSITY: f64 = 255.0;
const PLAIN_POLE_INTENSITY: f64 = 60.0;
const ENVIRONMENT_MAX_INTENSITY: f64 = 100.0;

// Stream tags for the deterministic RNG split.
const STREAM_SCENARIO: u64 = 1;
const STREAM_LAYOUT: u64 = 2;
const STREAM_POLE: u64 = 3;
const STREAM_ENVIRONMENT: u64 = 4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent generator for the stream identified by `seed` and `ids`.
pub fn stream_rng(seed: u64, ids: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix64(seed);
    for &id in ids {
        h = splitmix64(h ^ splitmix64(id));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Two fixed LiDARs observing two poles.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    /// Sensor → world pose of each LiDAR.
    pub lidar_poses: [RigidTransform; 2],
    pub poles: [PoleSpec; 2],
    pub lidar: LidarModel,
    pub seed: u64,
    /// Adds low-intensity environment returns seen by both sensors.
    pub environment: bool,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.lidar.validate()?;
        for (i, p) in self.poles.iter().enumerate() {
            p.validate().map_err(|e| SimError::Pole {
                pole: i,
                source: Box::new(e),
            })?;
        }
        let dot = self.poles[0].direction.dot(&self.poles[1].direction);
        if dot.abs() >= 1.0 - 1e-6 {
            return Err(SimError::DegenerateGeometry(format!(
                "pole directions are parallel (|dot| = {})",
                dot.abs()
            )));
        }
        Ok(())
    }

    /// LiDAR-2 frame → LiDAR-1 frame.
    pub fn ground_truth(&self) -> RigidTransform {
        self.lidar_poses[0]
            .inverse()
            .compose(&self.lidar_poses[1])
    }
}

/// The two sensor poses used by the randomized experiment.
pub fn reference_lidar_poses() -> [RigidTransform; 2] {
    [0, 1].map(|i| {
        RigidTransform::from_quaternion_translation(
            LIDAR_QUATERNIONS[i],
            Vec3::from(LIDAR_POSITIONS[i]),
        )
        .expect("constant quaternion")
    })
}

/// Randomized two-pole scene. Directions are drawn uniformly on the cap
/// `n_z > 0.9`; each pole crosses `z = 0` on the y-axis at a distance drawn
/// uniformly from `[2, 3]`, one on each side of the sensors.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = stream_rng(seed, &[STREAM_SCENARIO]);
    let direction = |rng: &mut ChaCha8Rng| {
        let z: f64 = rng.random_range(0.9..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).sqrt();
        Vec3::new(s * phi.cos(), s * phi.sin(), z)
    };
    let (da, db) = loop {
        let (a, b) = (direction(&mut rng), direction(&mut rng));
        if a.dot(&b).abs() < 1.0 - 1e-6 {
            break (a, b);
        }
    };
    let ya = -rng.random_range(2.0..=3.0);
    let yb = rng.random_range(2.0..=3.0);
    let pole = |y: f64, d: Vec3| PoleSpec {
        anchor: Vec3::new(0.0, y, 0.0),
        direction: d,
        radius: DEFAULT_RADIUS,
        z_extent: DEFAULT_Z_EXTENT,
        reflective: true,
    };
    Scenario {
        lidar_poses: reference_lidar_poses(),
        poles: [pole(ya, da), pole(yb, db)],
        lidar: LidarModel::vlp16(0.006),
        seed,
        environment: true,
    }
}

/// World-frame environment samples: a ground patch, two walls and two boxes,
/// deliberately without rotational symmetry. Jitter is drawn from `seed`.
pub fn environment_points(seed: u64) -> Vec<Vec3> {
    let mut rng = stream_rng(seed, &[STREAM_LAYOUT]);
    let mut out = Vec::new();
    let jitter = |rng: &mut ChaCha8Rng, amp: f64| rng.random_range(-amp..amp);

    // Ground.
    let mut x = -5.0;
    while x <= 8.0 {
        let mut y = -7.0;
        while y <= 7.0 {
            out.push(Vec3::new(
                x + jitter(&mut rng, 0.2),
                y + jitter(&mut rng, 0.2),
                GROUND_Z,
            ));
            y += 0.5;
        }
        x += 0.5;
    }
    // Wall facing the sensors.
    let mut y = -7.0;
    while y <= 5.0 {
        let mut z = GROUND_Z;
        while z <= 2.0 {
            out.push(Vec3::new(7.5, y + jitter(&mut rng, 0.1), z + jitter(&mut rng, 0.1)));
            z += 0.4;
        }
        y += 0.4;
    }
    // Side wall.
    let mut x = -4.0;
    while x <= 7.5 {
        let mut z = GROUND_Z;
        while z <= 1.5 {
            out.push(Vec3::new(x + jitter(&mut rng, 0.1), -6.5, z + jitter(&mut rng, 0.1)));
            z += 0.4;
        }
        x += 0.4;
    }
    for (center, half) in [
        (Vec3::new(3.0, 3.5, -0.25), Vec3::new(0.6, 0.4, 0.75)),
        (Vec3::new(-2.5, -3.0, 0.0), Vec3::new(0.4, 0.8, 1.0)),
    ] {
        box_surface(&mut out, &center, &half, 0.25, &mut rng);
    }
    out
}

fn box_surface(out: &mut Vec<Vec3>, center: &Vec3, half: &Vec3, step: f64, rng: &mut ChaCha8Rng) {
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [-1.0, 1.0] {
            let nu = (2.0 * half[u] / step).ceil() as usize;
            let nv = (2.0 * half[v] / step).ceil() as usize;
            for i in 0..=nu {
                for j in 0..=nv {
                    let mut p = *center;
                    p[axis] += side * half[axis];
                    p[u] += -half[u] + 2.0 * half[u] * i as f64 / nu as f64;
                    p[v] += -half[v] + 2.0 * half[v] * j as f64 / nv as f64;
                    p[u] += rng.random_range(-0.02..0.02);
                    out.push(p);
                }
            }
        }
    }
}

/// Where a simulated return came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointLabel {
    Pole(usize),
    Environment,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedScan {
    pub cloud: PointCloud,
    pub labels: Vec<PointLabel>,
}

/// Scan of `scenario` by LiDAR `lidar_index`, in that sensor's frame.
pub fn generate_scan(scenario: &Scenario, lidar_index: usize) -> Result<PointCloud, SimError> {
    generate_labeled_scan(scenario, lidar_index).map(|s| s.cloud)
}

pub fn generate_labeled_scan(
    scenario: &Scenario,
    lidar_index: usize,
) -> Result<SimulatedScan, SimError> {
    scenario.validate()?;
    if lidar_index > 1 {
        return Err(SimError::InvalidModel(format!(
            "lidar index {lidar_index} out of range"
        )));
    }
    let model = &scenario.lidar;
    let pose = &scenario.lidar_poses[lidar_index];
    let pose_inv = pose.inverse();
    let noise = Normal::new(0.0, model.noise_sigma)
        .map_err(|e| SimError::InvalidModel(e.to_string()))?;
    let add_noise = |p: Vec3, rng: &mut ChaCha8Rng| {
        if model.noise_sigma > 0.0 {
            p + Vec3::new(noise.sample(rng), noise.sample(rng), noise.sample(rng))
        } else {
            p
        }
    };

    let mut points = Vec::new();
    let mut intensities = Vec::new();
    let mut ring = Vec::new();
    let mut labels = Vec::new();

    for (j, pole) in scenario.poles.iter().enumerate() {
        let returns = noiseless_pole_returns(pose, pole, model).map_err(|e| SimError::Pole {
            pole: j,
            source: Box::new(e),
        })?;
        let intensity = if pole.reflective {
            REFLECTIVE_INTENSITY
        } else {
            PLAIN_POLE_INTENSITY
        };
        let mut rngs: Vec<Option<ChaCha8Rng>> = vec![None; model.channel_elevations.len()];
        for (world, ch) in returns {
            let rng = rngs[ch as usize].get_or_insert_with(|| {
                stream_rng(
                    scenario.seed,
                    &[STREAM_POLE, lidar_index as u64, j as u64, u64::from(ch)],
                )
            });
            points.push(add_noise(pose_inv.apply(&world), rng));
            intensities.push(intensity);
            ring.push(ch);
            labels.push(PointLabel::Pole(j));
        }
    }

    if scenario.environment {
        let mut rng = stream_rng(scenario.seed, &[STREAM_ENVIRONMENT, lidar_index as u64]);
        for w in environment_points(scenario.seed) {
            let p = pose_inv.apply(&w);
            let range = p.norm();
            if range > model.max_range || range < 1e-9 {
                continue;
            }
            let elevation = (p.z / range).asin();
            let ch = nearest_channel(&model.channel_elevations, elevation);
            let intensity = rng.random_range(0.0..=ENVIRONMENT_MAX_INTENSITY);
            points.push(add_noise(p, &mut rng));
            intensities.push(intensity);
            ring.push(ch as u16);
            labels.push(PointLabel::Environment);
        }
    }

    let cloud = PointCloud::new(points, intensities, Some(ring))
        .map_err(|e| SimError::InvalidModel(e.to_string()))?;
    Ok(SimulatedScan { cloud, labels })
}

/// Noiseless returns of one pole seen by a sensor with pose `pose`, as
/// world-frame points with their channel index, channel by channel.
pub fn noiseless_pole_returns(
    pose: &RigidTransform,
    pole: &PoleSpec,
    model: &LidarModel,
) -> Result<Vec<(Vec3, u16)>, SimError> {
    model.validate()?;
    let frame = canonicalize_pole_frame(pose, pole)?;
    let q = frame.lidar_to_pole.rotation;
    let x_p = frame.x_p;
    let sensor = Vec3::new(x_p, 0.0, 0.0);
    let pole_to_world = frame.world_to_pole.inverse();

    // Bearing of the axis point where the central plane meets it.
    let v0 = frame.scan_normal;
    let z0 = if v0.z.abs() > 1e-12 { v0.x * x_p / v0.z } else { 0.0 };
    let toward = q.inverse().apply(&Vec3::new(-x_p, 0.0, z0));
    let bearing = toward.y.atan2(toward.x);

    let mut out = Vec::new();
    for (ch, &elevation) in model.channel_elevations.iter().enumerate() {
        let normal = q.apply(&tilted_scan_normal(elevation, bearing));
        let arc = march_beam_points(x_p, &normal, pole.radius, model.azimuth_resolution)?;
        for p in arc {
            if (p - sensor).norm() > model.max_range {
                continue;
            }
            let world = pole_to_world.apply(&p);
            if world.z < pole.z_extent[0] || world.z > pole.z_extent[1] {
                continue;
            }
            out.push((world, ch as u16));
        }
    }
    Ok(out)
}

fn nearest_channel(elevations: &[f64], e: f64) -> usize {
    elevations
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}
