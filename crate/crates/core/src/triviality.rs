//! Detection of methods that are usually not worth testing: `toString`
//! overrides, simple getters, and methods too trivial to test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::changeset::{PruneReason, TicketChangeset};
use crate::parser::{MethodDescriptor, MethodKey, MethodKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterCategory {
    Tostring,
    SimpleGetter,
    TooTrivial,
    None,
}

impl FilterCategory {
    pub const TRIVIAL: [FilterCategory; 3] = [
        FilterCategory::Tostring,
        FilterCategory::SimpleGetter,
        FilterCategory::TooTrivial,
    ];
}

impl fmt::Display for FilterCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterCategory::Tostring => "tostring",
            FilterCategory::SimpleGetter => "getter",
            FilterCategory::TooTrivial => "trivial",
            FilterCategory::None => "none",
        })
    }
}

impl FromStr for FilterCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "tostring" => Ok(FilterCategory::Tostring),
            "getter" => Ok(FilterCategory::SimpleGetter),
            "trivial" => Ok(FilterCategory::TooTrivial),
            other => Err(format!(
                "unknown filter category `{other}` (expected tostring, getter or trivial)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterVerdict {
    pub key: MethodKey,
    pub category: FilterCategory,
}

pub fn classify_triviality(d: &MethodDescriptor) -> FilterVerdict {
    let too_trivial = (d.kind == MethodKind::Constructor
        && d.super_call_shape.is_some_and(|after| after <= 1)
        && d.statement_count <= 2)
        || (d.returns_boolean_literal_only && d.statement_count == 1);
    let category = if d.is_override_of_tostring {
        FilterCategory::Tostring
    } else if d.getter_shape.is_some() {
        FilterCategory::SimpleGetter
    } else if too_trivial {
        FilterCategory::TooTrivial
    } else {
        FilterCategory::None
    };
    FilterVerdict {
        key: d.key.clone(),
        category,
    }
}

/// Verdicts for every method of `changeset`. Methods without a recorded
/// descriptor are never filtered.
pub fn verdicts_for(changeset: &TicketChangeset) -> BTreeMap<MethodKey, FilterVerdict> {
    changeset
        .methods
        .iter()
        .map(|(key, m)| {
            let verdict = match &m.descriptor {
                Some(d) => classify_triviality(d),
                None => FilterVerdict {
                    key: key.clone(),
                    category: FilterCategory::None,
                },
            };
            (key.clone(), verdict)
        })
        .collect()
}

/// Removes methods whose verdict is in `enabled` (all three categories when
/// `enabled` is empty), recording them as pruned.
pub fn apply_filter(
    changeset: &TicketChangeset,
    verdicts: &BTreeMap<MethodKey, FilterVerdict>,
    enabled: &[FilterCategory],
) -> TicketChangeset {
    let enabled: &[FilterCategory] = if enabled.is_empty() {
        &FilterCategory::TRIVIAL
    } else {
        enabled
    };
    let mut out = TicketChangeset {
        ticket: changeset.ticket.clone(),
        methods: BTreeMap::new(),
        pruned: changeset.pruned.clone(),
    };
    for (key, method) in &changeset.methods {
        let category = verdicts
            .get(key)
            .map_or(FilterCategory::None, |v| v.category);
        if category != FilterCategory::None && enabled.contains(&category) {
            out.pruned
                .insert(key.clone(), PruneReason::Filtered(category));
        } else {
            out.methods.insert(key.clone(), method.clone());
        }
    }
    out
}
