//! Seeded generators with known structure, used by tests, examples and the
//! acceptance suite in place of real tracking data.

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::ingest::{FeatureSchema, PitchDataset, Provenance, RawPitch, SUBTYPE13};
use crate::mechanics::RectMatrix;

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Balanced labels `0..k` over `n` items in random order.
fn shuffled_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|i| i % k).collect();
    v.shuffle(rng);
    v
}

/// A matrix made of constant blocks plus Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedBlocks {
    pub rows: usize,
    pub cols: usize,
    pub row_clusters: usize,
    pub col_clusters: usize,
    /// Block `(r, c)` has mean `levels[(r + c) % levels.len()]`.
    pub levels: Vec<f64>,
    pub sigma: f64,
}

impl Default for PlantedBlocks {
    /// 30x30, 3x3 blocks with means {0, 0.5, 1}, noise sd 0.05.
    fn default() -> Self {
        PlantedBlocks {
            rows: 30,
            cols: 30,
            row_clusters: 3,
            col_clusters: 3,
            levels: vec![0.0, 0.5, 1.0],
            sigma: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedMatrix {
    pub matrix: RectMatrix,
    pub row_truth: Vec<usize>,
    pub col_truth: Vec<usize>,
    /// Planted mean of each (row cluster, column cluster) block.
    pub means: Vec<Vec<f64>>,
}

impl PlantedBlocks {
    pub fn generate(&self, seed: u64) -> PlantedMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row_truth = shuffled_labels(&mut rng, self.rows, self.row_clusters);
        let col_truth = shuffled_labels(&mut rng, self.cols, self.col_clusters);
        let means: Vec<Vec<f64>> = (0..self.row_clusters)
            .map(|r| {
                (0..self.col_clusters)
                    .map(|c| self.levels[(r + c) % self.levels.len()])
                    .collect()
            })
            .collect();
        let mut values = Vec::with_capacity(self.rows * self.cols);
        for &r in &row_truth {
            for &c in &col_truth {
                values.push(means[r][c] + self.sigma * gauss(&mut rng));
            }
        }
        let matrix = RectMatrix::from_row_major(
            (0..self.rows).map(|i| format!("row{i:03}")).collect(),
            (0..self.cols).map(|j| format!("col{j:03}")).collect(),
            values,
        )
        .expect("generated matrix is valid");
        PlantedMatrix {
            matrix,
            row_truth,
            col_truth,
            means,
        }
    }
}

/// Typical (mean, sd) of each default-schema feature for a four-seam
/// fastball, in schema units.
const PROFILE: [(&str, f64, f64); 21] = [
    ("start_speed", 92.5, 2.0),
    ("end_speed", 84.5, 2.0),
    ("vx0", 5.0, 2.5),
    ("vy0", -134.5, 3.0),
    ("vz0", -5.0, 2.0),
    ("ax", -8.0, 5.0),
    ("ay", 28.0, 2.5),
    ("az", -15.0, 4.0),
    ("pfx_x", -5.0, 3.5),
    ("pfx_z", 9.0, 2.5),
    ("break_angle", 25.0, 10.0),
    ("break_length", 5.0, 1.5),
    ("break_y", 23.8, 0.1),
    ("spin_dir", 200.0, 25.0),
    ("spin_rate", 2250.0, 150.0),
    ("x0", -1.5, 0.4),
    ("y0", 50.0, 0.02),
    ("z0", 6.0, 0.25),
    ("px", 0.0, 0.8),
    ("pz", 2.5, 0.8),
    ("sz_top", 3.4, 0.15),
];

/// Feature groups of [`MagnusCoupled`]: the four inner groups first, then
/// the three outer ones.
pub const MAGNUS_GROUPS: [&[&str]; 7] = [
    &["start_speed", "end_speed", "vy0"],
    &["pfx_z", "az", "break_length"],
    &["break_angle", "pfx_x", "ax", "spin_dir"],
    &["spin_rate"],
    &["x0", "vx0", "px"],
    &["z0", "vz0", "pz"],
    &["y0", "ay", "break_y", "sz_top"],
];

/// Pitches whose 21 features follow a seven-factor Gaussian model shaped
/// like spin and drag physics.
///
/// Each feature is `loading * Z_g + sqrt(1 - loading^2) * noise` for its
/// group's factor `Z_g`, mapped to a realistic mean and scale. The four
/// inner factors (speed, vertical movement, horizontal movement, spin rate)
/// share a common component with correlation `inner_coupling`; the three
/// outer factors (release and plate location, remaining geometry) are
/// independent of everything else. Population correlations are therefore
/// `loading^2` within a group, `loading^2 * inner_coupling` between inner
/// groups and 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnusCoupled {
    pub n_pitches: usize,
    pub loading: f64,
    pub inner_coupling: f64,
    pub pitcher_id: String,
    pub season: i32,
}

impl Default for MagnusCoupled {
    /// 2000 pitches, within-group correlation 0.95, between inner groups
    /// about 0.12.
    fn default() -> Self {
        MagnusCoupled {
            n_pitches: 2000,
            loading: 0.95f64.sqrt(),
            inner_coupling: 0.125,
            pitcher_id: "synthetic".into(),
            season: 2015,
        }
    }
}

impl MagnusCoupled {
    pub fn generate(&self, seed: u64) -> PitchDataset {
        let schema = FeatureSchema::pitchfx_default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let group_of: Vec<usize> = schema
            .names()
            .iter()
            .map(|name| {
                MAGNUS_GROUPS
                    .iter()
                    .position(|g| g.contains(name))
                    .expect("every schema feature has a group")
            })
            .collect();
        let unique = (1.0 - self.loading * self.loading).sqrt();
        let start = NaiveDate::from_ymd_opt(self.season, 4, 1).expect("valid date");
        let raw = (0..self.n_pitches)
            .map(|k| {
                let common = gauss(&mut rng);
                let factors: Vec<f64> = (0..MAGNUS_GROUPS.len())
                    .map(|g| {
                        let own = gauss(&mut rng);
                        if g < 4 {
                            self.inner_coupling.sqrt() * common + (1.0 - self.inner_coupling).sqrt() * own
                        } else {
                            own
                        }
                    })
                    .collect();
                let values = group_of
                    .iter()
                    .zip(PROFILE.iter())
                    .map(|(&g, &(_, mean, sd))| {
                        mean + sd * (self.loading * factors[g] + unique * gauss(&mut rng))
                    })
                    .collect();
                RawPitch {
                    pitcher_id: self.pitcher_id.clone(),
                    game_date: start + Duration::days((k * 180 / self.n_pitches.max(1)) as i64),
                    season: self.season,
                    pitch_type_label: "FF".into(),
                    values,
                }
            })
            .collect();
        let provenance = Provenance {
            kind: "synthetic-magnus".into(),
            sources: vec![format!("seed={seed}")],
            rejected_rows: 0,
        };
        PitchDataset::from_raw(schema, raw, provenance).expect("generated pitches are valid")
    }
}

/// One pitcher's pitches of one type drawn from well separated clusters in
/// the 13 subtype features, spread over several seasons.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSubtypes {
    pub pitcher_id: String,
    pub pitch_type: String,
    pub subtypes: usize,
    pub per_subtype: usize,
    /// Distance between cluster centres, in feature standard deviations.
    pub separation: f64,
    pub seasons: Vec<i32>,
    /// The last `emerging` subtypes only occur in the final season.
    pub emerging: usize,
}

impl Default for PlantedSubtypes {
    fn default() -> Self {
        PlantedSubtypes {
            pitcher_id: "kershaw".into(),
            pitch_type: "FF".into(),
            subtypes: 6,
            per_subtype: 40,
            separation: 6.0,
            seasons: (2012..=2017).collect(),
            emerging: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedPitches {
    pub dataset: PitchDataset,
    /// Planted subtype of each record, aligned with `dataset.records()`.
    pub truth: Vec<usize>,
}

impl PlantedSubtypes {
    pub fn generate(&self, seed: u64) -> PlantedPitches {
        let schema = FeatureSchema::pitchfx_default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let planted: Vec<usize> = schema
            .names()
            .iter()
            .map(|n| SUBTYPE13.iter().position(|s| s == n))
            .enumerate()
            .filter_map(|(i, p)| p.map(|_| i))
            .collect();
        let centres: Vec<Vec<f64>> = (0..self.subtypes)
            .map(|s| {
                // axis-aligned offsets keep every pair of centres apart
                (0..schema.len())
                    .map(|f| {
                        let slot = planted.iter().position(|&p| p == f);
                        match slot {
                            Some(k) if k % self.subtypes == s => self.separation,
                            Some(_) => 0.0,
                            None => 0.0,
                        }
                    })
                    .collect()
            })
            .collect();

        let last = *self.seasons.last().expect("at least one season");
        let n = self.subtypes * self.per_subtype;
        let mut labels = shuffled_labels(&mut rng, n, self.subtypes);
        // emerging subtypes go to the end, i.e. the final season
        let old = self.subtypes - self.emerging;
        labels.sort_by_key(|&s| s >= old);
        let n_old = labels.iter().filter(|&&s| s < old).count();
        let older_seasons = if self.emerging > 0 && self.seasons.len() > 1 {
            &self.seasons[..self.seasons.len() - 1]
        } else {
            &self.seasons[..]
        };

        let mut raw = Vec::with_capacity(n);
        for (k, &s) in labels.iter().enumerate() {
            let (season, pos, count) = if s < old {
                let idx = k * older_seasons.len() / n_old.max(1);
                (older_seasons[idx], k, n_old)
            } else {
                (last, k - n_old, n - n_old)
            };
            let day = (pos * 150 / count.max(1)) as i64 % 150;
            let date = NaiveDate::from_ymd_opt(season, 4, 1).expect("valid date") + Duration::days(day);
            let values = PROFILE
                .iter()
                .enumerate()
                .map(|(f, &(_, mean, sd))| mean + sd * (centres[s][f] + gauss(&mut rng)))
                .collect();
            raw.push((
                RawPitch {
                    pitcher_id: self.pitcher_id.clone(),
                    game_date: date,
                    season,
                    pitch_type_label: self.pitch_type.clone(),
                    values,
                },
                s,
            ));
        }
        raw.sort_by_key(|(r, _)| r.game_date);
        let truth = raw.iter().map(|(_, s)| *s).collect();
        let provenance = Provenance {
            kind: "synthetic-subtypes".into(),
            sources: vec![format!("seed={seed}")],
            rejected_rows: 0,
        };
        let dataset = PitchDataset::from_raw(schema, raw.into_iter().map(|(r, _)| r).collect(), provenance)
            .expect("generated pitches are valid");
        PlantedPitches { dataset, truth }
    }
}

/// Three pitchers in one season. `kershaw` throws FF in two distinct modes
/// plus SL and CU, `verlander` throws FF in three modes plus SL and CU, and
/// `hendricks` throws one slower, flatter, lower-spin FF plus SL and a
/// changeup (CH), a type `kershaw` never throws. The six fastball modes sit
/// at least three feature standard deviations apart in start_speed, pfx_z,
/// az and spin_rate; pitch-level noise is half a standard deviation.
/// Every (pitcher, type, mode) gets `per_mode` pitches.
pub fn three_pitchers(seed: u64, per_mode: usize, season: i32) -> PitchDataset {
    let schema = FeatureSchema::pitchfx_default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |name: &str| schema.index_of(name).expect("default feature");
    let fastball = |ss: f64, pz: f64, az: f64, sr: f64| -> Vec<(&'static str, f64)> {
        vec![("start_speed", ss), ("pfx_z", pz), ("az", az), ("spin_rate", sr)]
    };
    let slider = |ss: f64| vec![("start_speed", ss), ("pfx_x", 2.5), ("spin_dir", -3.0)];
    let modes: Vec<(&str, &str, Vec<(&str, f64)>)> = vec![
        ("kershaw", "FF", fastball(0.0, 2.0, 0.0, 2.0)),
        ("kershaw", "FF", fastball(3.0, 2.0, 0.0, 2.0)),
        ("kershaw", "SL", slider(-5.0)),
        ("kershaw", "CU", vec![("start_speed", -9.0), ("pfx_z", -6.0), ("az", -5.0), ("break_length", 6.0)]),
        ("verlander", "FF", fastball(0.0, -1.0, 0.0, 2.0)),
        ("verlander", "FF", fastball(3.0, -1.0, 0.0, 2.0)),
        ("verlander", "FF", fastball(1.5, 0.5, 3.0, 2.0)),
        ("verlander", "SL", slider(-4.5)),
        ("verlander", "CU", vec![("start_speed", -8.5), ("pfx_z", -5.5), ("az", -5.5), ("break_length", 5.5)]),
        ("hendricks", "FF", fastball(-3.5, -3.5, 3.5, -4.0)),
        ("hendricks", "CH", vec![("start_speed", -6.0), ("pfx_z", -2.0), ("spin_rate", -5.0)]),
        ("hendricks", "SL", slider(-5.5)),
    ];
    let start = NaiveDate::from_ymd_opt(season, 4, 1).expect("valid date");
    let mut raw = Vec::new();
    for (pitcher, pitch_type, shift) in modes {
        for k in 0..per_mode {
            let mut values: Vec<f64> = PROFILE.iter().map(|&(_, mean, sd)| mean + 0.5 * sd * gauss(&mut rng)).collect();
            for &(name, z) in &shift {
                values[idx(name)] += z * PROFILE[idx(name)].2;
            }
            raw.push(RawPitch {
                pitcher_id: pitcher.into(),
                game_date: start + Duration::days((k * 150 / per_mode.max(1)) as i64),
                season,
                pitch_type_label: pitch_type.into(),
                values,
            });
        }
    }
    let provenance = Provenance {
        kind: "synthetic-three-pitchers".into(),
        sources: vec![format!("seed={seed}")],
        rejected_rows: 0,
    };
    PitchDataset::from_raw(schema, raw, provenance).expect("generated pitches are valid")
}
