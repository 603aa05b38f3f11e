//! CSV snapshots of a world and of its metric history.

use std::fmt::Write as _;

use crate::dynamics::TickMetrics;
use crate::model::WorldState;

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `id,sector,x,y,teachers,enrolled,fee,income,rank,class_size`
pub fn schools_csv(world: &WorldState) -> String {
    let mut out = String::from("id,sector,x,y,teachers,enrolled,fee,income,rank,class_size\n");
    for s in &world.schools {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.id,
            s.sector,
            s.position.x,
            s.position.y,
            s.teachers,
            s.enrolled.len(),
            s.fee,
            s.income,
            s.rank,
            s.class_size
        );
    }
    out
}

/// `id,school,grades,wealth,growth_rate,age,retired,x,y`; the school and
/// position fields are empty for students without one.
pub fn students_csv(world: &WorldState) -> String {
    let mut out = String::from("id,school,grades,wealth,growth_rate,age,retired,x,y\n");
    for st in &world.students {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            st.id,
            opt(st.school),
            st.grades,
            st.wealth,
            st.growth_rate,
            st.age,
            st.retired,
            opt(st.position.map(|c| c.x)),
            opt(st.position.map(|c| c.y)),
        );
    }
    out
}

/// One row per tick: the scalar observables, then enrollment and teachers
/// of every school.
pub fn metrics_csv(history: &[TickMetrics]) -> String {
    let mut out = String::from("tick");
    for name in TickMetrics::SCALARS {
        out.push(',');
        out.push_str(name);
    }
    if let Some(first) = history.first() {
        for row in &first.per_school {
            let _ = write!(out, ",enrolled_{0},teachers_{0}", row.id);
        }
    }
    out.push('\n');
    for m in history {
        let _ = write!(out, "{}", m.tick);
        for name in TickMetrics::SCALARS {
            let _ = write!(out, ",{}", m.scalar(name).unwrap_or(f64::NAN));
        }
        for row in &m.per_school {
            let _ = write!(out, ",{},{}", row.enrollment, row.teachers);
        }
        out.push('\n');
    }
    out
}
