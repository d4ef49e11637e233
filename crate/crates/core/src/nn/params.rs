use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

/// Learning-rate group of a parameter slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamGroup {
    Sdf,
    Specular,
    Symmetry,
    Tau,
    Background,
    Diffuse,
    Material,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 7] = [
        ParamGroup::Sdf,
        ParamGroup::Specular,
        ParamGroup::Symmetry,
        ParamGroup::Tau,
        ParamGroup::Background,
        ParamGroup::Diffuse,
        ParamGroup::Material,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Sdf => "sdf",
            ParamGroup::Specular => "specular",
            ParamGroup::Symmetry => "symmetry",
            ParamGroup::Tau => "tau",
            ParamGroup::Background => "background",
            ParamGroup::Diffuse => "diffuse",
            ParamGroup::Material => "material",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        ParamGroup::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        ParamGroup::ALL.get(usize::from(c)).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSlice {
    pub name: String,
    pub group: ParamGroup,
    pub range: Range<usize>,
}

/// Flat parameter vector with named, disjoint, contiguous slices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    values: Vec<f64>,
    slices: Vec<ParamSlice>,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore::default()
    }

    /// Appends a slice; returns its range.
    pub fn push(&mut self, name: &str, group: ParamGroup, values: &[f64]) -> Range<usize> {
        assert!(self.find(name).is_none(), "duplicate parameter slice `{name}`");
        let start = self.values.len();
        self.values.extend_from_slice(values);
        let range = start..self.values.len();
        self.slices.push(ParamSlice { name: String::from(name), group, range: range.clone() });
        range
    }

    /// Rebuilds a store from its raw parts, checking that slices tile the values.
    pub fn from_parts(values: Vec<f64>, slices: Vec<ParamSlice>) -> Option<Self> {
        let mut next = 0;
        for s in &slices {
            if s.range.start != next || s.range.end < s.range.start {
                return None;
            }
            next = s.range.end;
        }
        (next == values.len()).then_some(ParameterStore { values, slices })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn slices(&self) -> &[ParamSlice] {
        &self.slices
    }

    pub fn find(&self, name: &str) -> Option<&ParamSlice> {
        self.slices.iter().find(|s| s.name == name)
    }

    pub fn range(&self, name: &str) -> Range<usize> {
        self.find(name).map(|s| s.range.clone()).unwrap_or_else(|| panic!("no parameter slice `{name}`"))
    }

    pub fn get(&self, name: &str) -> &[f64] {
        &self.values[self.range(name)]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut [f64] {
        let r = self.range(name);
        &mut self.values[r]
    }
}
