/// The 118 periodic-table element symbols.
pub const ELEMENT_SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Regex alternation over element symbols, two-letter symbols first.
pub(crate) fn element_alternation() -> String {
    let mut symbols = ELEMENT_SYMBOLS.to_vec();
    symbols.sort_by_key(|s| std::cmp::Reverse(s.len()));
    format!("(?:{})", symbols.join("|"))
}

/// Regex fragment for a molecular formula such as `CH3OH`, `Ca(OH)2` or
/// `NH4+`.
pub(crate) fn formula_fragment() -> String {
    let elem = element_alternation();
    format!(r"(?:{elem}[0-9]*|\((?:{elem}[0-9]*)+\)[0-9]*)+(?:[0-9]*[+-])?")
}
