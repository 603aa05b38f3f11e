//! Agents, the grid they live on, and the world that owns them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::rng::SimRng;

pub type SchoolId = u32;
pub type StudentId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sector {
    Public,
    Private,
}

impl Sector {
    /// Public schools carry odd ids, private schools even ids.
    pub fn of_id(id: SchoolId) -> Sector {
        if id % 2 == 1 {
            Sector::Public
        } else {
            Sector::Private
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::Public => "public",
            Sector::Private => "private",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TipKind {
    Dynamic,
    Static,
}

/// Teacher induction policy: how many months a school waits after a hire
/// before it may hire again.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TipPolicy {
    pub kind: TipKind,
    pub recruitment_interval: u32,
}

impl TipPolicy {
    /// The sector with the shorter (or equal) hiring interval is the dynamic one.
    pub fn for_sector(sector: Sector, params: &SimParams) -> TipPolicy {
        let (own, other) = match sector {
            Sector::Public => (params.public_rec_interval, params.private_rec_interval),
            Sector::Private => (params.private_rec_interval, params.public_rec_interval),
        };
        TipPolicy {
            kind: if own <= other {
                TipKind::Dynamic
            } else {
                TipKind::Static
            },
            recruitment_interval: own,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn distance(self, other: Cell) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occupant {
    School(SchoolId),
    Student(StudentId),
}

/// Lattice of cells, each holding at most one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    cells: Vec<Option<Occupant>>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![None; width * height],
        }
    }

    fn index(&self, cell: Cell) -> usize {
        debug_assert!(cell.x < self.width && cell.y < self.height);
        cell.y * self.width + cell.x
    }

    pub fn get(&self, cell: Cell) -> Option<Occupant> {
        self.cells[self.index(cell)]
    }

    pub fn is_empty(&self, cell: Cell) -> bool {
        self.get(cell).is_none()
    }

    pub fn occupy(&mut self, cell: Cell, who: Occupant) {
        let i = self.index(cell);
        debug_assert!(self.cells[i].is_none(), "cell {cell:?} already taken");
        self.cells[i] = Some(who);
    }

    pub fn vacate(&mut self, cell: Cell) {
        let i = self.index(cell);
        self.cells[i] = None;
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Cells at Chebyshev distance exactly `d` from `center`, in row-major
    /// order (ascending y, then ascending x), clipped to the grid.
    pub fn ring(&self, center: Cell, d: usize) -> impl Iterator<Item = Cell> + '_ {
        let (cx, cy) = (center.x as i64, center.y as i64);
        let d = d as i64;
        let (w, h) = (self.width as i64, self.height as i64);
        (cy - d..=cy + d)
            .filter(move |&y| y >= 0 && y < h)
            .flat_map(move |y| {
                let full_row = (y - cy).abs() == d;
                (cx - d..=cx + d)
                    .filter(move |&x| x >= 0 && x < w)
                    .filter(move |&x| full_row || (x - cx).abs() == d)
                    .map(move |x| Cell::new(x as usize, y as usize))
            })
    }

    /// Nearest cell to `center` (by rings of growing Chebyshev distance,
    /// starting at `min_d`) that is empty and satisfies `accept`.
    pub fn nearest_where(
        &self,
        center: Cell,
        min_d: usize,
        accept: impl Fn(Cell) -> bool,
    ) -> Option<Cell> {
        let max_d = self.width.max(self.height);
        (min_d..=max_d).find_map(|d| {
            self.ring(center, d)
                .find(|&c| self.is_empty(c) && accept(c))
        })
    }
}

/// Students per teacher. Infinite when a school has students but no
/// teachers, zero when it has neither.
pub fn class_size(enrolled: usize, teachers: usize) -> f64 {
    match (enrolled, teachers) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (n, t) => n as f64 / t as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct School {
    pub id: SchoolId,
    pub sector: Sector,
    pub position: Cell,
    pub teachers: usize,
    pub enrolled: BTreeSet<StudentId>,
    /// Yearly fee.
    pub fee: f64,
    /// Cumulative fees received.
    pub income: f64,
    /// Fees received minus salaries paid.
    pub wealth: f64,
    /// Required daily home study hours.
    pub req_home_work: f64,
    pub class_work_hours: f64,
    pub class_size: f64,
    pub class_size_target: f64,
    pub rank: f64,
    pub grade_award_scheme: f64,
    pub tip: TipPolicy,
    /// Yearly salary bill.
    pub projected_cost: f64,
    pub last_induction_tick: u32,
}

impl School {
    pub fn recompute_class_size(&mut self) {
        self.class_size = class_size(self.enrolled.len(), self.teachers);
    }

    pub fn is_public(&self) -> bool {
        self.sector == Sector::Public
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Student {
    pub id: StudentId,
    /// `None` while out of school (and after retirement).
    pub school: Option<SchoolId>,
    pub grades: f64,
    pub wealth: f64,
    /// Yearly wealth growth.
    pub growth_rate: f64,
    /// Home study hours done in the last year.
    pub home_work: f64,
    /// Cumulative fees and other expenses.
    pub expenditure: f64,
    pub age: u32,
    pub years_in_school: u32,
    pub years_out: u32,
    pub retired: bool,
    /// `None` once retired: retirees leave the grid.
    pub position: Option<Cell>,
}

impl Student {
    pub fn should_retire(&self, params: &SimParams) -> bool {
        self.age > params.max_age
            || self.years_in_school > params.max_school_years
            || self.years_out > params.max_home_years
    }

    pub fn is_active(&self) -> bool {
        !self.retired
    }
}

/// Per-tick bookkeeping of money moved from students to schools.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeeLedger {
    pub paid_by_students: f64,
    pub received_by_schools: f64,
    pub expenditure_noise: f64,
    /// Spent by students on home study; leaves the system.
    pub home_study: f64,
}

/// The single mutable simulation object.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub params: SimParams,
    pub tick: u32,
    /// Sorted by id.
    pub schools: Vec<School>,
    /// Indexed by id.
    pub students: Vec<Student>,
    pub rng: SimRng,
    pub grid: Grid,
    /// Enrollment per school at the start of the current tick.
    pub prev_enrollment: BTreeMap<SchoolId, usize>,
    /// Enrollment per sector right after setup.
    pub baseline_public: usize,
    pub baseline_private: usize,
    pub last_ledger: FeeLedger,
}

impl WorldState {
    pub fn school_index(&self, id: SchoolId) -> Option<usize> {
        self.schools.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn school(&self, id: SchoolId) -> &School {
        &self.schools[self.school_index(id).expect("unknown school id")]
    }

    pub fn school_mut(&mut self, id: SchoolId) -> &mut School {
        let i = self.school_index(id).expect("unknown school id");
        &mut self.schools[i]
    }

    pub fn enrollment(&self) -> BTreeMap<SchoolId, usize> {
        self.schools.iter().map(|s| (s.id, s.enrolled.len())).collect()
    }

    pub fn sector_enrollment(&self, sector: Sector) -> usize {
        self.schools
            .iter()
            .filter(|s| s.sector == sector)
            .map(|s| s.enrolled.len())
            .sum()
    }

    pub fn active_students(&self) -> impl Iterator<Item = &Student> {
        self.students.iter().filter(|s| s.is_active())
    }

    pub fn out_of_school(&self) -> usize {
        self.active_students().filter(|s| s.school.is_none()).count()
    }

    pub fn retired(&self) -> usize {
        self.students.iter().filter(|s| s.retired).count()
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.params.max_ticks
    }

    /// Check the student/school enrollment relation in both directions, the
    /// grid occupancy and id parity.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Domain(m));
        for school in &self.schools {
            if Sector::of_id(school.id) != school.sector {
                return fail(format!("school {} has the wrong sector", school.id));
            }
            if self.grid.get(school.position) != Some(Occupant::School(school.id)) {
                return fail(format!("school {} is not on its cell", school.id));
            }
            for &sid in &school.enrolled {
                let st = &self.students[sid as usize];
                if st.retired || st.school != Some(school.id) {
                    return fail(format!("school {} lists student {sid} wrongly", school.id));
                }
            }
        }
        let mut on_grid = self.schools.len();
        for st in &self.students {
            if st.retired {
                if st.school.is_some() || st.position.is_some() {
                    return fail(format!("retired student {} still placed", st.id));
                }
                continue;
            }
            if let Some(sid) = st.school {
                if !self.school(sid).enrolled.contains(&st.id) {
                    return fail(format!("student {} missing from school {sid}", st.id));
                }
            }
            match st.position {
                Some(cell) if self.grid.get(cell) == Some(Occupant::Student(st.id)) => {
                    on_grid += 1
                }
                _ => return fail(format!("student {} is not on its cell", st.id)),
            }
        }
        if on_grid != self.grid.occupied() {
            return fail("stray grid occupants".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_size_conventions() {
        assert_eq!(class_size(0, 0), 0.0);
        assert_eq!(class_size(0, 4), 0.0);
        assert_eq!(class_size(5, 0), f64::INFINITY);
        assert_eq!(class_size(50, 10), 5.0);
    }

    #[test]
    fn recompute_is_idempotent() {
        let mut s = School {
            id: 1,
            sector: Sector::Public,
            position: Cell::new(0, 0),
            teachers: 3,
            enrolled: (0..7).collect(),
            fee: 0.0,
            income: 0.0,
            wealth: 0.0,
            req_home_work: 0.0,
            class_work_hours: 0.0,
            class_size: 0.0,
            class_size_target: 30.0,
            rank: 0.0,
            grade_award_scheme: 1.0,
            tip: TipPolicy {
                kind: TipKind::Static,
                recruitment_interval: 12,
            },
            projected_cost: 0.0,
            last_induction_tick: 0,
        };
        s.recompute_class_size();
        let once = s.clone();
        s.recompute_class_size();
        assert_eq!(s, once);
        assert_eq!(s.class_size, 7.0 / 3.0);
    }

    #[test]
    fn parity_defines_sector() {
        assert_eq!(Sector::of_id(1), Sector::Public);
        assert_eq!(Sector::of_id(2), Sector::Private);
        assert_eq!(Sector::of_id(5), Sector::Public);
    }

    #[test]
    fn ring_is_row_major_and_clipped() {
        let g = Grid::new(5, 5);
        let r1: Vec<Cell> = g.ring(Cell::new(2, 2), 1).collect();
        assert_eq!(r1.len(), 8);
        assert_eq!(r1[0], Cell::new(1, 1));
        assert_eq!(r1[3], Cell::new(1, 2));
        assert_eq!(r1[7], Cell::new(3, 3));
        assert_eq!(g.ring(Cell::new(2, 2), 2).count(), 16);
        assert_eq!(g.ring(Cell::new(0, 0), 1).count(), 3);
        assert_eq!(g.ring(Cell::new(0, 0), 0).collect::<Vec<_>>(), vec![Cell::new(0, 0)]);
    }

    #[test]
    fn tip_kind_follows_shorter_interval() {
        let mut p = SimParams::default();
        p.public_rec_interval = 48;
        p.private_rec_interval = 12;
        assert_eq!(TipPolicy::for_sector(Sector::Private, &p).kind, TipKind::Dynamic);
        assert_eq!(TipPolicy::for_sector(Sector::Public, &p).kind, TipKind::Static);
    }
}
