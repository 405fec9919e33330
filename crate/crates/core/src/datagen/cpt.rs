use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::defendant::{
    AgeGroup, Childcare, Children, DefendantFeatures, Employment, Gender, Race, Transportation,
    WorkHour,
};
use crate::error::{Error, Result};

/// Number of slots in the court-day grid the slot table is defined over.
pub const COURT_SLOTS: usize = 12;

const CPT_TOL: f64 = 1e-9;

/// Conditional distribution of one categorical node: one row per parent
/// context, one column per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cpt(pub Vec<Vec<f64>>);

impl Cpt {
    fn validate(&self, name: &str, contexts: usize, categories: usize) -> Result<()> {
        if self.0.len() != contexts {
            return Err(Error::Config(format!(
                "{name}: expected {contexts} contexts, found {}",
                self.0.len()
            )));
        }
        for (c, row) in self.0.iter().enumerate() {
            if row.len() != categories {
                return Err(Error::Config(format!(
                    "{name}: context {c} has {} categories, expected {categories}",
                    row.len()
                )));
            }
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Config(format!("{name}: context {c} has a negative probability")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > CPT_TOL {
                return Err(Error::Config(format!("{name}: context {c} sums to {s}")));
            }
        }
        Ok(())
    }

    pub fn row(&self, context: usize) -> &[f64] {
        &self.0[context]
    }

    pub fn sample<R: Rng + ?Sized>(&self, context: usize, rng: &mut R) -> usize {
        sample_categorical(&self.0[context], rng)
    }
}

/// Inverse-CDF draw; never returns a zero-probability category.
pub(crate) fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// The nine conditional probability tables of the defendant causal graph.
///
/// Conditioning contexts are indexed by parent codes: `childcare` by
/// `2 * gender + children`, `primary_slot` by
/// `8 * transportation + 2 * work_hour + childcare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CptSet {
    pub race: Cpt,
    pub age: Cpt,
    pub gender: Cpt,
    pub transportation: Cpt,
    pub employment: Cpt,
    pub work_hour: Cpt,
    pub children: Cpt,
    pub childcare: Cpt,
    pub primary_slot: Cpt,
}

/// Name, context count and category count of every table, in the order
/// [`CptSet::tables`] returns them.
pub const TABLE_SHAPES: [(&str, usize, usize); 9] = [
    ("race", 1, 2),
    ("age", 1, 3),
    ("gender", 1, 2),
    ("transportation|race", 2, 2),
    ("employment|race", 2, 2),
    ("work_hour|employment", 2, 4),
    ("children|age", 3, 2),
    ("childcare|gender,children", 4, 2),
    ("primary_slot|transportation,work_hour,childcare", 16, COURT_SLOTS),
];

impl CptSet {
    pub fn tables(&self) -> [&Cpt; 9] {
        [
            &self.race,
            &self.age,
            &self.gender,
            &self.transportation,
            &self.employment,
            &self.work_hour,
            &self.children,
            &self.childcare,
            &self.primary_slot,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (cpt, (name, ctx, cat)) in self.tables().into_iter().zip(TABLE_SHAPES) {
            cpt.validate(name, ctx, cat)?;
        }
        Ok(())
    }

    pub fn childcare_context(gender: Gender, children: Children) -> usize {
        2 * gender.code() as usize + children.code() as usize
    }

    pub fn slot_context(t: Transportation, w: WorkHour, c: Childcare) -> usize {
        8 * t.code() as usize + 2 * w.code() as usize + c.code() as usize
    }

    /// Ancestral sampling in topological order: race, age, gender, then
    /// transportation and employment, work hour, children, childcare.
    pub fn sample_defendant<R: Rng + ?Sized>(&self, rng: &mut R) -> DefendantFeatures {
        let race = Race::ALL[self.race.sample(0, rng)];
        let age = AgeGroup::ALL[self.age.sample(0, rng)];
        let gender = Gender::ALL[self.gender.sample(0, rng)];
        let transportation = Transportation::ALL[self.transportation.sample(race.code() as usize, rng)];
        let employment = Employment::ALL[self.employment.sample(race.code() as usize, rng)];
        let work_hour = WorkHour::ALL[self.work_hour.sample(employment.code() as usize, rng)];
        let children = Children::ALL[self.children.sample(age.code() as usize, rng)];
        let childcare =
            Childcare::ALL[self.childcare.sample(Self::childcare_context(gender, children), rng)];
        DefendantFeatures {
            race,
            age,
            gender,
            transportation,
            employment,
            work_hour,
            children,
            childcare,
        }
    }

    /// Draws the first-choice slot on the 12-slot court day.
    pub fn sample_primary_slot<R: Rng + ?Sized>(
        &self,
        f: &DefendantFeatures,
        rng: &mut R,
    ) -> Result<usize> {
        let ctx = Self::slot_context(f.transportation, f.work_hour, f.childcare);
        let row = self.primary_slot.row(ctx);
        if row.iter().all(|p| *p <= 0.0) {
            return Err(Error::Config(format!("primary slot context {ctx} has no support")));
        }
        Ok(sample_categorical(row, rng))
    }
}

fn slots(mass: &[(usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; COURT_SLOTS];
    for &(k, p) in mass {
        row[k] = p;
    }
    row
}

fn uniform_over(range: std::ops::Range<usize>) -> Vec<f64> {
    let p = 1.0 / range.len() as f64;
    slots(&range.map(|k| (k, p)).collect::<Vec<_>>())
}

impl Default for CptSet {
    /// Tables elicited for the court-scheduling study.
    fn default() -> Self {
        let public_day = uniform_over(0..6); // 8:00-10:30 AM
        let public_night = uniform_over(3..6); // 9:30-10:30 AM
        let private_day_care = uniform_over(0..6);
        let private_day_free = uniform_over(9..12); // 2:30-3:30 PM
        let private_night = uniform_over(0..4); // 8:00-9:30 AM

        let mut primary = Vec::with_capacity(16);
        for t in Transportation::ALL {
            for w in WorkHour::ALL {
                for c in Childcare::ALL {
                    let row = match (t, w, c) {
                        (Transportation::Public, WorkHour::Night, _) => &public_night,
                        // Irregular and no-shift defendants on public transport
                        // follow the day/regular block.
                        (Transportation::Public, _, _) => &public_day,
                        (Transportation::Private, WorkHour::Night | WorkHour::Irregular, _) => {
                            &private_night
                        }
                        // No-shift defendants on private transport follow the
                        // day-shift blocks.
                        (Transportation::Private, _, Childcare::HasObligation) => &private_day_care,
                        (Transportation::Private, _, Childcare::NoObligation) => &private_day_free,
                    };
                    primary.push(row.clone());
                }
            }
        }

        CptSet {
            race: Cpt(vec![vec![0.5, 0.5]]),
            age: Cpt(vec![vec![0.05, 0.8, 0.15]]),
            gender: Cpt(vec![vec![0.45, 0.55]]),
            transportation: Cpt(vec![vec![0.8, 0.2], vec![0.6, 0.4]]),
            employment: Cpt(vec![vec![0.8, 0.2], vec![0.7, 0.3]]),
            work_hour: Cpt(vec![vec![0.5, 0.3, 0.18, 0.02], vec![0.0, 0.0, 0.0, 1.0]]),
            children: Cpt(vec![vec![0.95, 0.05], vec![0.55, 0.45], vec![0.2, 0.8]]),
            // Contexts: (Male, no child), (Male, +1), (Female, no child), (Female, +1).
            childcare: Cpt(vec![
                vec![1.0, 0.0],
                vec![0.85, 0.15],
                vec![1.0, 0.0],
                vec![0.3, 0.7],
            ]),
            primary_slot: Cpt(primary),
        }
    }
}
