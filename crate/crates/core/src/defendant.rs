//! Categorical defendant attributes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! categorical {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> u8 {
                self as u8
            }

            pub fn from_code(code: u8) -> Result<Self> {
                Self::ALL.get(code as usize).copied().ok_or_else(|| {
                    Error::invalid(format!(
                        "{} code {code} outside 0..{}",
                        stringify!($name),
                        Self::ALL.len()
                    ))
                })
            }

            pub fn label(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }
    };
}

categorical!(Race { White => "White", NonWhite => "Non White" });
categorical!(AgeGroup { Below18 => "Below 18", Age18To54 => "18-54", Above55 => "Above 55" });
categorical!(Gender { Male => "Male", Female => "Female" });
categorical!(Transportation { Public => "Public transportation", Private => "Private transportation" });
categorical!(Employment { Employed => "Employed", Unemployed => "Unemployed" });
categorical!(WorkHour {
    Day => "Day shift",
    Night => "Night shift",
    Irregular => "Irregular shift",
    NoShift => "No shift",
});
categorical!(Children { NoChild => "No child", OneOrMore => "+1 child" });
categorical!(Childcare { NoObligation => "No obligation", HasObligation => "Have obligation" });

/// Number of categories per feature, in serialization order.
pub const CARDINALITIES: [usize; 8] = [2, 3, 2, 2, 2, 4, 2, 2];

/// Width of the concatenated one-hot encoding.
pub const ONE_HOT_WIDTH: usize = 19;

/// One defendant's eight categorical attributes. Serialized as the array of
/// codes `[race, age, gender, transportation, employment, work_hour,
/// children, childcare]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u8; 8]", into = "[u8; 8]")]
pub struct DefendantFeatures {
    pub race: Race,
    pub age: AgeGroup,
    pub gender: Gender,
    pub transportation: Transportation,
    pub employment: Employment,
    pub work_hour: WorkHour,
    pub children: Children,
    pub childcare: Childcare,
}

impl DefendantFeatures {
    pub fn validate(&self) -> Result<()> {
        if self.employment == Employment::Unemployed && self.work_hour != WorkHour::NoShift {
            return Err(Error::invalid(format!(
                "unemployed defendant with work hour {:?}",
                self.work_hour
            )));
        }
        Ok(())
    }

    pub fn codes(&self) -> [u8; 8] {
        [
            self.race.code(),
            self.age.code(),
            self.gender.code(),
            self.transportation.code(),
            self.employment.code(),
            self.work_hour.code(),
            self.children.code(),
            self.childcare.code(),
        ]
    }

    pub fn from_codes(c: [u8; 8]) -> Result<Self> {
        let f = DefendantFeatures {
            race: Race::from_code(c[0])?,
            age: AgeGroup::from_code(c[1])?,
            gender: Gender::from_code(c[2])?,
            transportation: Transportation::from_code(c[3])?,
            employment: Employment::from_code(c[4])?,
            work_hour: WorkHour::from_code(c[5])?,
            children: Children::from_code(c[6])?,
            childcare: Childcare::from_code(c[7])?,
        };
        f.validate()?;
        Ok(f)
    }

    /// Concatenated one-hot vector of length [`ONE_HOT_WIDTH`].
    pub fn one_hot(&self) -> Vec<f64> {
        let mut out = vec![0.0; ONE_HOT_WIDTH];
        let mut offset = 0;
        for (code, card) in self.codes().iter().zip(CARDINALITIES) {
            out[offset + *code as usize] = 1.0;
            offset += card;
        }
        out
    }
}

impl TryFrom<[u8; 8]> for DefendantFeatures {
    type Error = Error;

    fn try_from(c: [u8; 8]) -> Result<Self> {
        DefendantFeatures::from_codes(c)
    }
}

impl From<DefendantFeatures> for [u8; 8] {
    fn from(f: DefendantFeatures) -> Self {
        f.codes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities_match_enums() {
        let cards = [
            Race::ALL.len(),
            AgeGroup::ALL.len(),
            Gender::ALL.len(),
            Transportation::ALL.len(),
            Employment::ALL.len(),
            WorkHour::ALL.len(),
            Children::ALL.len(),
            Childcare::ALL.len(),
        ];
        assert_eq!(cards, CARDINALITIES);
        assert_eq!(CARDINALITIES.iter().sum::<usize>(), ONE_HOT_WIDTH);
    }

    #[test]
    fn codes_validated() {
        assert!(DefendantFeatures::from_codes([0, 1, 0, 0, 0, 0, 0, 0]).is_ok());
        assert!(DefendantFeatures::from_codes([0, 3, 0, 0, 0, 0, 0, 0]).is_err());
        // Unemployed must have no shift.
        assert!(DefendantFeatures::from_codes([0, 1, 0, 0, 1, 1, 0, 0]).is_err());
        assert!(DefendantFeatures::from_codes([0, 1, 0, 0, 1, 3, 0, 0]).is_ok());
    }

    #[test]
    fn one_hot_has_one_bit_per_feature() {
        let f = DefendantFeatures::from_codes([1, 2, 1, 1, 0, 2, 1, 1]).unwrap();
        let v = f.one_hot();
        assert_eq!(v.iter().sum::<f64>(), 8.0);
        assert_eq!(v[1], 1.0);
        assert_eq!(v[2 + 2], 1.0);
    }
}
