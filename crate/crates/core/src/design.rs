//! Two-stage household design: simple random sampling of households without
//! replacement, every member of a selected household enters the sample.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::PopulationFrame;
use crate::{Error, Real, Result};

/// Deterministic stream for replicate `replicate` of a run seeded with `seed`.
///
/// Every replicate owns an independent ChaCha stream, so replicates can be
/// evaluated in any order or in parallel and still see the same draws.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageDesign {
    household_sizes: Arc<[usize]>,
    // prefix sums of household sizes, len H + 1
    offsets: Arc<[usize]>,
    sampled: usize,
}

impl TwoStageDesign {
    pub fn new(household_sizes: Vec<usize>, sampled: usize) -> Result<Self> {
        let households = household_sizes.len();
        if households == 0 {
            return Err(Error::Config("design needs at least one household".into()));
        }
        if household_sizes.contains(&0) {
            return Err(Error::Config("household sizes must be positive".into()));
        }
        if sampled == 0 || sampled > households {
            return Err(Error::Config(format!(
                "households to sample must lie in 1..={households}, got {sampled}"
            )));
        }
        let mut offsets = Vec::with_capacity(households + 1);
        offsets.push(0);
        for s in &household_sizes {
            offsets.push(offsets.last().unwrap() + s);
        }
        Ok(TwoStageDesign {
            household_sizes: household_sizes.into(),
            offsets: offsets.into(),
            sampled,
        })
    }

    pub fn for_frame(frame: &PopulationFrame, sampled: usize) -> Result<Self> {
        Self::new(frame.household_sizes(), sampled)
    }

    /// H.
    pub fn households(&self) -> usize {
        self.household_sizes.len()
    }

    /// n_h.
    pub fn sampled(&self) -> usize {
        self.sampled
    }

    pub fn household_sizes(&self) -> &[usize] {
        &self.household_sizes
    }

    pub fn population_size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Household of population unit `k` (household-major numbering).
    pub fn household_of_unit(&self, k: usize) -> usize {
        assert!(k < self.population_size(), "unit {k} outside the population");
        self.offsets.partition_point(|&o| o <= k) - 1
    }

    /// π_k = n_h / H for every unit.
    pub fn first_order<T: Real>(&self) -> T {
        T::count(self.sampled) / T::count(self.households())
    }

    pub fn weight<T: Real>(&self) -> T {
        T::count(self.households()) / T::count(self.sampled)
    }

    /// Joint inclusion of units in households `hk` and `hl`.
    pub fn joint_inclusion_households<T: Real>(&self, hk: usize, hl: usize) -> T {
        let f = self.first_order::<T>();
        if hk == hl {
            return f;
        }
        let h = self.households();
        if h == 1 {
            return f;
        }
        f * T::count(self.sampled - 1) / T::count(h - 1)
    }

    /// π_{kℓ} for population units `k` and `l`.
    pub fn joint_inclusion<T: Real>(&self, k: usize, l: usize) -> T {
        self.joint_inclusion_households(self.household_of_unit(k), self.household_of_unit(l))
    }

    /// Δ̃_{kℓ} = (π_{kℓ} − π_k π_ℓ) / π_{kℓ} for households `hk`, `hl`.
    pub fn delta_tilde_households<T: Real>(&self, hk: usize, hl: usize) -> Result<T> {
        let joint = self.joint_inclusion_households::<T>(hk, hl);
        if joint <= T::zero() {
            return Err(Error::Design(format!(
                "joint inclusion probability is zero for households {hk} and {hl} (n_h = {})",
                self.sampled
            )));
        }
        let f = self.first_order::<T>();
        Ok((joint - f * f) / joint)
    }

    pub fn delta_tilde<T: Real>(&self, k: usize, l: usize) -> Result<T> {
        self.delta_tilde_households(self.household_of_unit(k), self.household_of_unit(l))
    }

    /// Δ̃ for two members of the same household: 1 − n_h/H.
    pub fn within_delta<T: Real>(&self) -> T {
        T::one() - self.first_order::<T>()
    }

    /// Δ̃ across households: 1 − (n_h/H)(H−1)/(n_h−1).
    pub fn cross_delta<T: Real>(&self) -> Result<T> {
        if self.households() == 1 {
            return Ok(T::zero());
        }
        if self.sampled < 2 {
            return Err(Error::Design(
                "cross-household Δ̃ is undefined when a single household is sampled".into(),
            ));
        }
        let f = self.first_order::<T>();
        Ok(T::one() - f * T::count(self.households() - 1) / T::count(self.sampled - 1))
    }
}

/// First- and second-order inclusion probabilities of the units in a sample,
/// indexed by their position in the sample.
pub trait InclusionProbabilities {
    fn sample_size(&self) -> usize;
    fn first_order<T: Real>(&self, k: usize) -> T;
    fn second_order<T: Real>(&self, k: usize, l: usize) -> T;
}

/// A realized two-stage sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    /// Frame positions of the sampled persons, household-major.
    pub units: Vec<usize>,
    /// Household index (in the frame) of each sampled person.
    pub household_of: Vec<usize>,
    /// Design weight w_k = H / n_h.
    pub weights: Vec<f64>,
    /// π_k = n_h / H.
    pub pi: Vec<f64>,
    /// Equivalized income of each sampled person.
    pub income: Vec<f64>,
    /// Auxiliary value of each sampled person.
    pub aux: Vec<f64>,
    design: TwoStageDesign,
}

impl SampleDraw {
    /// Builds the sample made of the listed households, in the given order.
    pub fn from_households(frame: &PopulationFrame, design: &TwoStageDesign, households: &[usize]) -> Self {
        let w = design.weight::<f64>();
        let p = design.first_order::<f64>();
        let persons = frame.persons();
        let mut draw = SampleDraw {
            units: Vec::new(),
            household_of: Vec::new(),
            weights: Vec::new(),
            pi: Vec::new(),
            income: Vec::new(),
            aux: Vec::new(),
            design: design.clone(),
        };
        for &h in households {
            for k in frame.household(h) {
                draw.units.push(k);
                draw.household_of.push(h);
                draw.weights.push(w);
                draw.pi.push(p);
                draw.income.push(persons[k].eq_income);
                draw.aux.push(persons[k].aux);
            }
        }
        draw
    }

    pub fn design(&self) -> &TwoStageDesign {
        &self.design
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Sampled households in sample order.
    pub fn households(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for &h in &self.household_of {
            if out.last() != Some(&h) {
                out.push(h);
            }
        }
        out
    }

    /// Contiguous position ranges of each household within the sample.
    pub fn household_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = 0;
        for k in 1..=self.household_of.len() {
            if k == self.household_of.len() || self.household_of[k] != self.household_of[start] {
                runs.push(start..k);
                start = k;
            }
        }
        runs
    }

    pub fn weights_as<T: Real>(&self) -> Vec<T> {
        vec![self.design.weight::<T>(); self.len()]
    }
}

impl InclusionProbabilities for SampleDraw {
    fn sample_size(&self) -> usize {
        self.len()
    }

    fn first_order<T: Real>(&self, _k: usize) -> T {
        self.design.first_order()
    }

    fn second_order<T: Real>(&self, k: usize, l: usize) -> T {
        self.design
            .joint_inclusion_households(self.household_of[k], self.household_of[l])
    }
}

fn check_frame(frame: &PopulationFrame, design: &TwoStageDesign) -> Result<()> {
    if design.households() != frame.household_count() {
        return Err(Error::Config(format!(
            "design has {} households but the population has {}",
            design.households(),
            frame.household_count()
        )));
    }
    Ok(())
}

/// Draws n_h households uniformly without replacement.
pub fn draw_sample(frame: &PopulationFrame, design: &TwoStageDesign, seed: u64, replicate: u64) -> Result<SampleDraw> {
    check_frame(frame, design)?;
    let mut rng = replicate_rng(seed, replicate);
    let mut households: Vec<usize> = (0..design.households()).collect();
    let (chosen, _) = households.partial_shuffle(&mut rng, design.sampled());
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    Ok(SampleDraw::from_households(frame, design, &chosen))
}

/// Draws two samples with disjoint household sets.
///
/// One uniform random ordering of the households is drawn; its first n_h1
/// households form the first sample and the next n_h2 the second. Each
/// sample is marginally a simple random sample of its size, and carries the
/// inclusion probabilities of its own marginal design.
pub fn draw_two_disjoint_samples(
    frame: &PopulationFrame,
    first: &TwoStageDesign,
    second: &TwoStageDesign,
    seed: u64,
    replicate: u64,
) -> Result<(SampleDraw, SampleDraw)> {
    check_frame(frame, first)?;
    check_frame(frame, second)?;
    let (n1, n2) = (first.sampled(), second.sampled());
    if n1 + n2 > frame.household_count() {
        return Err(Error::Config(format!(
            "disjoint samples need n_h1 + n_h2 <= H, got {n1} + {n2} > {}",
            frame.household_count()
        )));
    }
    let mut rng = replicate_rng(seed, replicate);
    let mut households: Vec<usize> = (0..frame.household_count()).collect();
    let (chosen, _) = households.partial_shuffle(&mut rng, n1 + n2);
    let mut s1 = chosen[..n1].to_vec();
    let mut s2 = chosen[n1..].to_vec();
    s1.sort_unstable();
    s2.sort_unstable();
    Ok((
        SampleDraw::from_households(frame, first, &s1),
        SampleDraw::from_households(frame, second, &s2),
    ))
}
