//! Localized series rings and their region-directed expansions.

pub mod laurent;
pub mod localized;
pub mod poly;

pub use localized::{Denominator, Localizer, LocalizedSeries, QuadForm, Series, Side, VarGroup, EXACT};
pub use laurent::{
    clear_and_compare, iota_expand, reexpand_three_point, three_point_series, Comparison,
    Constraint, ExpansionOrder, IteratedLaurent, SignedExp, Window,
};
