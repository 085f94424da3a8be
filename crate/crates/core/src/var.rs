//! Variable identifiers: base coordinates, jets of the defining function, group parameters.

use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BaseVar {
    Z,
    Zb,
    U,
}

/// The jet `phi_{a,b,c}`: `a` derivatives in `z`, `b` in `zb`, `c` in `u`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct JetVar {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl JetVar {
    pub const fn new(a: u8, b: u8, c: u8) -> Self {
        JetVar { a, b, c }
    }

    pub fn order(&self) -> u32 {
        self.a as u32 + self.b as u32 + self.c as u32
    }

    pub fn conj(&self) -> Self {
        JetVar::new(self.b, self.a, self.c)
    }
}

// Graded lexicographic order.
impl Ord for JetVar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order()
            .cmp(&other.order())
            .then(other.a.cmp(&self.a))
            .then(other.b.cmp(&self.b))
            .then(other.c.cmp(&self.c))
    }
}

impl PartialOrd for JetVar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GroupVar {
    B,
    Bb,
    C,
    Cb,
    S,
    Sb,
    R,
    Rb,
}

impl GroupVar {
    pub const ALL: [GroupVar; 8] = [
        GroupVar::B,
        GroupVar::Bb,
        GroupVar::C,
        GroupVar::Cb,
        GroupVar::S,
        GroupVar::Sb,
        GroupVar::R,
        GroupVar::Rb,
    ];

    pub fn conj(self) -> Self {
        match self {
            GroupVar::B => GroupVar::Bb,
            GroupVar::Bb => GroupVar::B,
            GroupVar::C => GroupVar::Cb,
            GroupVar::Cb => GroupVar::C,
            GroupVar::S => GroupVar::Sb,
            GroupVar::Sb => GroupVar::S,
            GroupVar::R => GroupVar::Rb,
            GroupVar::Rb => GroupVar::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupVar::B => "b",
            GroupVar::Bb => "bb",
            GroupVar::C => "c",
            GroupVar::Cb => "cb",
            GroupVar::S => "s",
            GroupVar::Sb => "sb",
            GroupVar::R => "r",
            GroupVar::Rb => "rb",
        }
    }
}

/// Variables are ordered base < jet < group.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum VarId {
    Base(BaseVar),
    Jet(JetVar),
    Group(GroupVar),
}

impl VarId {
    pub const Z: VarId = VarId::Base(BaseVar::Z);
    pub const ZB: VarId = VarId::Base(BaseVar::Zb);
    pub const U: VarId = VarId::Base(BaseVar::U);

    pub fn jet(a: u8, b: u8, c: u8) -> VarId {
        VarId::Jet(JetVar::new(a, b, c))
    }

    pub fn conj(self) -> VarId {
        match self {
            VarId::Base(BaseVar::Z) => VarId::ZB,
            VarId::Base(BaseVar::Zb) => VarId::Z,
            VarId::Base(BaseVar::U) => VarId::U,
            VarId::Jet(j) => VarId::Jet(j.conj()),
            VarId::Group(g) => VarId::Group(g.conj()),
        }
    }

    pub fn is_self_conjugate(self) -> bool {
        self.conj() == self
    }

    /// Lookup by printed name: `z`, `zb`, `u`, `b`, `bb`, `c`, `cb`, `s`, `sb`, `r`, `rb`.
    pub fn from_name(name: &str) -> Option<VarId> {
        Some(match name {
            "z" => VarId::Z,
            "zb" => VarId::ZB,
            "u" => VarId::U,
            "b" => VarId::Group(GroupVar::B),
            "bb" => VarId::Group(GroupVar::Bb),
            "c" => VarId::Group(GroupVar::C),
            "cb" => VarId::Group(GroupVar::Cb),
            "s" => VarId::Group(GroupVar::S),
            "sb" => VarId::Group(GroupVar::Sb),
            "r" => VarId::Group(GroupVar::R),
            "rb" => VarId::Group(GroupVar::Rb),
            _ => return None,
        })
    }

    pub fn tex(self) -> String {
        match self {
            VarId::Base(BaseVar::Z) => "z".into(),
            VarId::Base(BaseVar::Zb) => "\\overline{z}".into(),
            VarId::Base(BaseVar::U) => "u".into(),
            VarId::Jet(j) => format!("\\varphi_{{{},{},{}}}", j.a, j.b, j.c),
            VarId::Group(g) => match g {
                GroupVar::B => "\\mathsf{b}".into(),
                GroupVar::Bb => "\\overline{\\mathsf{b}}".into(),
                GroupVar::C => "\\mathsf{c}".into(),
                GroupVar::Cb => "\\overline{\\mathsf{c}}".into(),
                GroupVar::S => "\\mathsf{s}".into(),
                GroupVar::Sb => "\\overline{\\mathsf{s}}".into(),
                GroupVar::R => "\\mathsf{r}".into(),
                GroupVar::Rb => "\\overline{\\mathsf{r}}".into(),
            },
        }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarId::Base(BaseVar::Z) => f.write_str("z"),
            VarId::Base(BaseVar::Zb) => f.write_str("zb"),
            VarId::Base(BaseVar::U) => f.write_str("u"),
            VarId::Jet(j) => write!(f, "phi[{},{},{}]", j.a, j.b, j.c),
            VarId::Group(g) => f.write_str(g.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_base_jet_group() {
        let mut v = vec![
            VarId::Group(GroupVar::B),
            VarId::jet(0, 1, 0),
            VarId::U,
            VarId::jet(1, 0, 0),
            VarId::Z,
            VarId::jet(2, 0, 0),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                VarId::Z,
                VarId::U,
                VarId::jet(1, 0, 0),
                VarId::jet(0, 1, 0),
                VarId::jet(2, 0, 0),
                VarId::Group(GroupVar::B),
            ]
        );
    }

    #[test]
    fn conj_involution() {
        for v in [VarId::Z, VarId::U, VarId::jet(3, 1, 2), VarId::Group(GroupVar::Cb)] {
            assert_eq!(v.conj().conj(), v);
        }
        assert!(VarId::jet(2, 2, 1).is_self_conjugate());
    }
}
