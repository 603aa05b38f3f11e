//! The yearly simulation cycle.
//!
//! One tick is one school year:
//!
//! 1. snapshot per-school enrollment;
//! 2. wealth growth, fee payment and grading, then the enrollment pass
//!    (rank driven, or class-size driven in TIP mode);
//! 3. teacher induction;
//! 4. ageing and retirement, with optional replacement by new entrants;
//! 5. class sizes, salaries and ranks;
//! 6. metrics.
//!
//! Students are always processed in ascending id and schools in ascending
//! id, and every random draw comes from the world's single stream.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::metrics::{self, GroupCounts};
use crate::model::{
    class_size, Cell, FeeLedger, Grid, Occupant, School, SchoolId, Sector, Student, StudentId,
    TipPolicy, WorldState,
};
use crate::params::SimParams;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MigrationDecision {
    Stay,
    MigrateTo(SchoolId),
    OutOfSchool,
}

/// What a student compares schools by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoiceCriterion {
    /// Higher rank is better.
    Rank,
    /// Smaller class is better.
    ClassSize,
}

/// A school as seen by one student during the enrollment pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchoolOption {
    pub id: SchoolId,
    pub fee: f64,
    pub rank: f64,
    /// Class size the student would sit in: the current size for their own
    /// school, the size after joining for any other.
    pub class_size: f64,
}

impl SchoolOption {
    fn score(&self, criterion: ChoiceCriterion) -> f64 {
        match criterion {
            ChoiceCriterion::Rank => self.rank,
            ChoiceCriterion::ClassSize => -self.class_size,
        }
    }
}

/// Stay, migrate or drop out.
///
/// A school is affordable when `wealth > fee`. The student stays when the
/// current school is affordable and no affordable school is strictly
/// better; otherwise they move to the best affordable school (lowest id on
/// ties), or leave schooling when nothing is affordable.
pub fn choose_school(
    wealth: f64,
    current: Option<SchoolId>,
    options: &[SchoolOption],
    criterion: ChoiceCriterion,
) -> MigrationDecision {
    let mut best: Option<&SchoolOption> = None;
    for o in options.iter().filter(|o| wealth > o.fee) {
        best = match best {
            None => Some(o),
            Some(b) => {
                let (so, sb) = (o.score(criterion), b.score(criterion));
                if so > sb || (so == sb && o.id < b.id) {
                    Some(o)
                } else {
                    Some(b)
                }
            }
        };
    }
    let Some(best) = best else {
        return MigrationDecision::OutOfSchool;
    };
    if let Some(cur) = current.and_then(|id| options.iter().find(|o| o.id == id)) {
        if wealth > cur.fee && cur.score(criterion) >= best.score(criterion) {
            return MigrationDecision::Stay;
        }
    }
    MigrationDecision::MigrateTo(best.id)
}

/// Grade increment of one year: `kappa + class study + home study`.
///
/// Class study is `class_work_hours * min(1, ref_class_size / class_size) *
/// grade_award_scheme`; home study is the school's required hours capped by
/// the whole hours the student can pay for out of their home study budget.
/// Returns `(new grades, home study hours)`.
pub fn award_grades(student: &Student, school: &School, params: &SimParams) -> (f64, f64) {
    let class_credit = if school.class_size.is_infinite() {
        0.0
    } else if school.class_size <= 0.0 {
        1.0
    } else {
        (params.ref_class_size / school.class_size).min(1.0)
    };
    let in_class = school.class_work_hours * class_credit * school.grade_award_scheme;
    let home = home_study_hours(student.wealth, school.req_home_work, params);
    (params.kappa + student.grades + in_class + home, home)
}

/// Whole daily home study hours a student with `wealth` can pay for, capped
/// at the school's requirement.
pub fn home_study_hours(wealth: f64, required: f64, params: &SimParams) -> f64 {
    let affordable = if params.home_work_cost <= 0.0 {
        f64::INFINITY
    } else {
        (params.home_study_budget_fraction * wealth.max(0.0) / params.home_work_cost).floor()
    };
    required.min(affordable).max(0.0)
}

/// Hire or (optionally) release teachers at a hiring window.
///
/// A window is open when at least `recruitment_interval` months have passed
/// since the last change (12 months per tick). A school over its class-size
/// target hires up to `ceil(enrolled / target)` teachers, at least one.
/// Returns whether the staff changed.
pub fn induct_teacher(school: &mut School, tick: u32, teacher_removal: bool) -> bool {
    let elapsed_months = u64::from(tick.saturating_sub(school.last_induction_tick)) * 12;
    if elapsed_months < u64::from(school.tip.recruitment_interval) {
        return false;
    }
    let target = school.class_size_target;
    if school.class_size > target {
        let needed = (school.enrolled.len() as f64 / target).ceil() as usize;
        school.teachers = needed.max(school.teachers + 1);
        school.last_induction_tick = tick;
        school.recompute_class_size();
        true
    } else if teacher_removal && school.teachers > 1 && school.class_size < target / 2.0 {
        school.teachers -= 1;
        school.last_induction_tick = tick;
        school.recompute_class_size();
        true
    } else {
        false
    }
}

/// Build the initial world.
pub fn setup(params: &SimParams) -> Result<WorldState> {
    params.validate()?;
    let mut rng = SimRng::new(params.seed);
    let grid = Grid::new(params.grid_width, params.grid_height);

    let mut ids: Vec<SchoolId> = (1..=params.n_public as u32).map(|k| 2 * k - 1).collect();
    ids.extend((1..=params.n_private as u32).map(|k| 2 * k));
    ids.sort_unstable();

    let mut schools = Vec::with_capacity(ids.len());
    for id in ids {
        let sector = Sector::of_id(id);
        let teachers = rng.uniform_int(
            params.initial_teachers_min as i64,
            params.initial_teachers_max as i64,
        ) as usize;
        schools.push(configure_school(id, sector, teachers, params));
    }

    let mut world = WorldState {
        params: params.clone(),
        tick: 0,
        schools,
        students: Vec::with_capacity(params.n_students),
        rng,
        grid,
        prev_enrollment: BTreeMap::new(),
        baseline_public: 0,
        baseline_private: 0,
        last_ledger: FeeLedger::default(),
    };
    place_schools(&mut world)?;

    let oldest = params
        .max_age
        .min(params.entry_age + params.max_school_years.saturating_sub(1));
    for _ in 0..params.n_students {
        let age = world.rng.uniform_int(params.entry_age as i64, oldest as i64) as u32;
        let id = new_student(&mut world, age);
        world.students[id as usize].years_in_school = age - params.entry_age;
    }
    for id in 0..world.students.len() as StudentId {
        enroll_initially(&mut world, id, ChoiceCriterion::ClassSize)?;
    }

    for s in &mut world.schools {
        s.recompute_class_size();
    }
    world.prev_enrollment = world.enrollment();
    world.baseline_public = world.sector_enrollment(Sector::Public);
    world.baseline_private = world.sector_enrollment(Sector::Private);
    Ok(world)
}

fn configure_school(id: SchoolId, sector: Sector, teachers: usize, p: &SimParams) -> School {
    let (fee, req, work, target, scheme, salary) = match sector {
        Sector::Public => (
            p.public_fee,
            p.req_home_hours_public,
            p.class_work_hours_public,
            p.class_size_target_public,
            p.grade_award_scheme_public,
            p.teacher_salary_public,
        ),
        Sector::Private => (
            p.private_fee,
            p.req_home_hours_private,
            p.class_work_hours_private,
            p.class_size_target_private,
            p.grade_award_scheme_private,
            p.teacher_salary_private,
        ),
    };
    School {
        id,
        sector,
        position: Cell::new(0, 0),
        teachers,
        enrolled: BTreeSet::new(),
        fee,
        income: 0.0,
        wealth: 0.0,
        req_home_work: req,
        class_work_hours: work,
        class_size: 0.0,
        class_size_target: target,
        rank: 0.0,
        grade_award_scheme: scheme,
        tip: TipPolicy::for_sector(sector, p),
        projected_cost: teachers as f64 * salary * 12.0,
        last_induction_tick: 0,
    }
}

fn salary(params: &SimParams, sector: Sector) -> f64 {
    match sector {
        Sector::Public => params.teacher_salary_public,
        Sector::Private => params.teacher_salary_private,
    }
}

/// Put every school on its own cell.
///
/// Schools are laid out on a `rows x cols` lattice (`rows = ceil(sqrt(n))`)
/// spread evenly over the grid. Each school takes the empty cell nearest to
/// its lattice point whose coordinates are both multiples of its id, or the
/// nearest empty cell at all when no such cell exists. Placement does not
/// depend on the seed.
pub fn place_schools(world: &mut WorldState) -> Result<()> {
    let n = world.schools.len();
    if n == 0 {
        return Ok(());
    }
    let rows = (n as f64).sqrt().ceil() as usize;
    let cols = n.div_ceil(rows);
    let (w, h) = (world.grid.width, world.grid.height);
    for i in 0..n {
        let id = world.schools[i].id as usize;
        let (row, col) = (i / cols, i % cols);
        let target = Cell::new(
            ((col + 1) * w / (cols + 1)).min(w - 1),
            ((row + 1) * h / (rows + 1)).min(h - 1),
        );
        let cell = world
            .grid
            .nearest_where(target, 0, |c| c.x % id == 0 && c.y % id == 0)
            .or_else(|| world.grid.nearest_where(target, 0, |_| true))
            .ok_or(Error::GridFull {
                width: w,
                height: h,
            })?;
        world.grid.occupy(cell, Occupant::School(id as SchoolId));
        world.schools[i].position = cell;
    }
    Ok(())
}

/// Create a student (not yet placed or enrolled) with fresh wealth and
/// growth draws.
fn new_student(world: &mut WorldState, age: u32) -> StudentId {
    let p = &world.params;
    let (wlo, whi) = (p.wealth_init_min, p.wealth_init_max);
    let (glo, ghi) = (p.growth_rate_min, p.growth_rate_max);
    let wealth = draw_currency(&mut world.rng, wlo, whi);
    let growth_rate = draw_currency(&mut world.rng, glo, ghi);
    let id = world.students.len() as StudentId;
    world.students.push(Student {
        id,
        school: None,
        grades: 0.0,
        wealth,
        growth_rate,
        home_work: 0.0,
        expenditure: 0.0,
        age,
        years_in_school: 0,
        years_out: 0,
        retired: false,
        position: None,
    });
    id
}

/// Whole currency units drawn uniformly from `[lo, hi]`.
fn draw_currency(rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ceil(), hi.floor());
    if b < a {
        return lo;
    }
    rng.uniform_int(a as i64, b as i64) as f64
}

/// Snapshot of every school as student `sid` sees it.
fn options_for(world: &WorldState, sid: StudentId) -> Vec<SchoolOption> {
    let current = world.students[sid as usize].school;
    world
        .schools
        .iter()
        .map(|s| {
            let n = s.enrolled.len() + usize::from(current != Some(s.id));
            SchoolOption {
                id: s.id,
                fee: s.fee,
                rank: s.rank,
                class_size: class_size(n, s.teachers),
            }
        })
        .collect()
}

/// First enrollment of a student. At setup no school has a track record, so
/// students go by class size (the schools' teacher counts); later entrants
/// use the criterion of the current mode.
fn enroll_initially(world: &mut WorldState, sid: StudentId, criterion: ChoiceCriterion) -> Result<()> {
    let options = options_for(world, sid);
    let wealth = world.students[sid as usize].wealth;
    match choose_school(wealth, None, &options, criterion) {
        MigrationDecision::MigrateTo(school) => {
            enroll(world, sid, school);
            make_student_neighbour(world, sid, school)
        }
        _ => place_out_of_school(world, sid),
    }
}

fn mode_criterion(params: &SimParams) -> ChoiceCriterion {
    if params.tip_mode {
        ChoiceCriterion::ClassSize
    } else {
        ChoiceCriterion::Rank
    }
}

fn enroll(world: &mut WorldState, sid: StudentId, school: SchoolId) {
    if let Some(old) = world.students[sid as usize].school.take() {
        let s = world.school_mut(old);
        s.enrolled.remove(&sid);
        s.recompute_class_size();
    }
    let s = world.school_mut(school);
    s.enrolled.insert(sid);
    s.recompute_class_size();
    world.students[sid as usize].school = Some(school);
}

fn unroll(world: &mut WorldState, sid: StudentId) {
    if let Some(old) = world.students[sid as usize].school.take() {
        let s = world.school_mut(old);
        s.enrolled.remove(&sid);
        s.recompute_class_size();
    }
}

/// Move a student to the empty cell nearest their school: rings of growing
/// Chebyshev distance around the school, each scanned row-major.
pub fn make_student_neighbour(world: &mut WorldState, sid: StudentId, school: SchoolId) -> Result<()> {
    let center = world.school(school).position;
    place_near(world, sid, center)
}

/// Students out of school wait where they are; newcomers without a school
/// are placed near the grid centre.
fn place_out_of_school(world: &mut WorldState, sid: StudentId) -> Result<()> {
    if world.students[sid as usize].position.is_some() {
        return Ok(());
    }
    let center = Cell::new(world.grid.width / 2, world.grid.height / 2);
    place_near(world, sid, center)
}

fn place_near(world: &mut WorldState, sid: StudentId, center: Cell) -> Result<()> {
    if let Some(old) = world.students[sid as usize].position.take() {
        world.grid.vacate(old);
    }
    let cell = world
        .grid
        .nearest_where(center, 1, |_| true)
        .ok_or(Error::GridFull {
            width: world.grid.width,
            height: world.grid.height,
        })?;
    world.grid.occupy(cell, Occupant::Student(sid));
    world.students[sid as usize].position = Some(cell);
    Ok(())
}

fn apply_decision(world: &mut WorldState, sid: StudentId, decision: MigrationDecision) -> Result<()> {
    match decision {
        MigrationDecision::Stay => Ok(()),
        MigrationDecision::MigrateTo(school) => {
            if world.students[sid as usize].school == Some(school) {
                return Ok(());
            }
            enroll(world, sid, school);
            make_student_neighbour(world, sid, school)
        }
        MigrationDecision::OutOfSchool => {
            unroll(world, sid);
            place_out_of_school(world, sid)
        }
    }
}

/// Wealth growth, fee payment and grading for every active student.
fn yearly_finances_and_grades(world: &mut WorldState) {
    let mut ledger = FeeLedger::default();
    let noise_max = world.params.expenditure_noise_max;
    let delta_w = world.params.delta_w;
    for i in 0..world.students.len() {
        if world.students[i].retired {
            continue;
        }
        let growth = world.students[i].growth_rate;
        world.students[i].wealth += delta_w + growth;
        let Some(sid) = world.students[i].school else {
            world.students[i].home_work = 0.0;
            continue;
        };
        let noise = if noise_max > 0.0 {
            world.rng.uniform_real(0.0, noise_max)
        } else {
            0.0
        };
        let idx = world.school_index(sid).expect("enrolled in unknown school");
        let fee = world.schools[idx].fee;
        {
            let st = &mut world.students[i];
            st.wealth -= fee;
            st.wealth -= noise;
            st.expenditure += fee + noise;
        }
        {
            let school = &mut world.schools[idx];
            school.income += fee;
            school.wealth += fee;
        }
        ledger.paid_by_students += fee;
        ledger.received_by_schools += fee;
        ledger.expenditure_noise += noise;

        let (grades, home) = award_grades(&world.students[i], &world.schools[idx], &world.params);
        let st = &mut world.students[i];
        st.grades = grades;
        st.home_work = home;
        if world.params.home_study_paid {
            let cost = home * world.params.home_work_cost;
            st.wealth -= cost;
            st.expenditure += cost;
            ledger.home_study += cost;
        }
    }
    world.last_ledger = ledger;
}

/// Unroll students graded below the expulsion floor.
fn expel_low_grades(world: &mut WorldState) {
    let floor = world.params.expel_grade_min;
    for i in 0..world.students.len() {
        let st = &world.students[i];
        if !st.retired && st.school.is_some() && st.grades < floor {
            unroll(world, i as StudentId);
        }
    }
}

fn enrollment_pass(world: &mut WorldState, criterion: ChoiceCriterion) -> Result<()> {
    for i in 0..world.students.len() as StudentId {
        if world.students[i as usize].retired {
            continue;
        }
        let options = options_for(world, i);
        let st = &world.students[i as usize];
        let decision = choose_school(st.wealth, st.school, &options, criterion);
        apply_decision(world, i, decision)?;
    }
    for s in &mut world.schools {
        s.recompute_class_size();
    }
    Ok(())
}

/// Rank-driven year: grow wealth, pay fees, award grades, then let every
/// student re-choose among affordable schools by rank.
pub fn get_enrolled_ses(world: &mut WorldState) -> Result<()> {
    for s in &mut world.schools {
        s.recompute_class_size();
    }
    yearly_finances_and_grades(world);
    expel_low_grades(world);
    enrollment_pass(world, ChoiceCriterion::Rank)
}

/// Class-size-driven year: as the rank-driven one but students pick the
/// smallest affordable class, after which schools hire per their policy.
pub fn get_enrolled_tip(world: &mut WorldState, tick: u32) -> Result<()> {
    for s in &mut world.schools {
        s.recompute_class_size();
    }
    yearly_finances_and_grades(world);
    expel_low_grades(world);
    enrollment_pass(world, ChoiceCriterion::ClassSize)?;
    let removal = world.params.teacher_removal;
    for s in &mut world.schools {
        induct_teacher(s, tick, removal);
    }
    Ok(())
}

/// Add `teachers / students + mean grade + alpha * u` to each non-empty
/// school's rank, with `u` uniform in `[0, 1)`. One draw per school per
/// call, empty or not.
pub fn calculate_rank_ses(world: &mut WorldState) {
    let alpha = world.params.rank_noise_alpha_max;
    for i in 0..world.schools.len() {
        let u = world.rng.uniform_real(0.0, 1.0);
        let school = &world.schools[i];
        let n = school.enrolled.len();
        if n == 0 {
            continue;
        }
        let mean_grade = school
            .enrolled
            .iter()
            .map(|&sid| world.students[sid as usize].grades)
            .sum::<f64>()
            / n as f64;
        let ratio = school.teachers as f64 / n as f64;
        world.schools[i].rank += ratio + mean_grade + alpha * u;
    }
}

/// Age every active student by a year, retire those past a limit and, when
/// enabled, admit one new entrant per retiree.
fn age_and_retire(world: &mut WorldState) -> Result<()> {
    let mut retirees = 0usize;
    for i in 0..world.students.len() {
        if world.students[i].retired {
            continue;
        }
        {
            let st = &mut world.students[i];
            st.age += 1;
            if st.school.is_some() {
                st.years_in_school += 1;
            } else {
                st.years_out += 1;
            }
        }
        if world.students[i].should_retire(&world.params) {
            unroll(world, i as StudentId);
            if let Some(cell) = world.students[i].position.take() {
                world.grid.vacate(cell);
            }
            world.students[i].retired = true;
            retirees += 1;
        }
    }
    if world.params.replace_retired {
        let entry_age = world.params.entry_age;
        let criterion = mode_criterion(&world.params);
        for _ in 0..retirees {
            let id = new_student(world, entry_age);
            enroll_initially(world, id, criterion)?;
        }
    }
    Ok(())
}

fn pay_salaries(world: &mut WorldState) {
    let params = world.params.clone();
    for s in &mut world.schools {
        s.projected_cost = s.teachers as f64 * salary(&params, s.sector) * 12.0;
        s.wealth -= s.projected_cost;
    }
}

/// Per-school observables of one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct SchoolRow {
    pub id: SchoolId,
    pub enrollment: usize,
    pub teachers: usize,
    pub class_size: f64,
    pub rank: f64,
    pub income: f64,
}

/// Observables emitted after every tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickMetrics {
    pub tick: u32,
    /// One row per school, sorted by id.
    pub per_school: Vec<SchoolRow>,
    /// Net migration of the public sector over this tick, percent.
    pub migration_index_public: f64,
    pub migration_index_private: f64,
    /// Net migration of the public sector since setup, percent.
    pub migration_total_public: f64,
    pub migration_total_private: f64,
    pub seg_count_index: f64,
    pub seg_wealth_index: f64,
    pub avg_wealth_public: f64,
    pub avg_wealth_private: f64,
    pub enrolled_public: usize,
    pub enrolled_private: usize,
    pub out_of_school: usize,
    pub retired: usize,
    pub gini_wealth: f64,
    pub gini_grades: f64,
}

impl TickMetrics {
    /// Names of the scalar observables, in `scalar` order.
    pub const SCALARS: &'static [&'static str] = &[
        "migration_index_public",
        "migration_index_private",
        "migration_total_public",
        "migration_total_private",
        "seg_count_index",
        "seg_wealth_index",
        "avg_wealth_public",
        "avg_wealth_private",
        "enrolled_public",
        "enrolled_private",
        "out_of_school",
        "retired",
        "gini_wealth",
        "gini_grades",
    ];

    pub fn scalar(&self, name: &str) -> Option<f64> {
        Some(match name {
            "migration_index_public" => self.migration_index_public,
            "migration_index_private" => self.migration_index_private,
            "migration_total_public" => self.migration_total_public,
            "migration_total_private" => self.migration_total_private,
            "seg_count_index" => self.seg_count_index,
            "seg_wealth_index" => self.seg_wealth_index,
            "avg_wealth_public" => self.avg_wealth_public,
            "avg_wealth_private" => self.avg_wealth_private,
            "enrolled_public" => self.enrolled_public as f64,
            "enrolled_private" => self.enrolled_private as f64,
            "out_of_school" => self.out_of_school as f64,
            "retired" => self.retired as f64,
            "gini_wealth" => self.gini_wealth,
            "gini_grades" => self.gini_grades,
            _ => return None,
        })
    }
}

fn sector_index(prev: usize, curr: usize) -> f64 {
    // a sector that was empty and gained students has no defined index
    metrics::migration_index(prev, curr).unwrap_or(0.0)
}

/// Compute the observables of the world's current state.
pub fn observe(world: &WorldState) -> TickMetrics {
    let per_school = world
        .schools
        .iter()
        .map(|s| SchoolRow {
            id: s.id,
            enrollment: s.enrolled.len(),
            teachers: s.teachers,
            class_size: s.class_size,
            rank: s.rank,
            income: s.income,
        })
        .collect();

    let prev_sector = |sector: Sector| -> usize {
        world
            .prev_enrollment
            .iter()
            .filter(|(id, _)| Sector::of_id(**id) == sector)
            .map(|(_, n)| *n)
            .sum()
    };
    let enrolled_public = world.sector_enrollment(Sector::Public);
    let enrolled_private = world.sector_enrollment(Sector::Private);

    let active: Vec<&Student> = world.active_students().collect();
    let pivot = if active.is_empty() {
        0.0
    } else {
        active.iter().map(|s| s.wealth).sum::<f64>() / active.len() as f64
    };
    let groups: Vec<GroupCounts> = world
        .schools
        .iter()
        .map(|s| {
            GroupCounts::tally(
                s.id,
                s.enrolled.iter().map(|&sid| world.students[sid as usize].wealth),
                pivot,
            )
        })
        .collect();

    let avg_wealth = |sector: Sector| -> f64 {
        let (sum, n) = world
            .schools
            .iter()
            .filter(|s| s.sector == sector)
            .flat_map(|s| s.enrolled.iter())
            .fold((0.0, 0usize), |(sum, n), &sid| {
                (sum + world.students[sid as usize].wealth, n + 1)
            });
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    };

    TickMetrics {
        tick: world.tick,
        per_school,
        migration_index_public: sector_index(prev_sector(Sector::Public), enrolled_public),
        migration_index_private: sector_index(prev_sector(Sector::Private), enrolled_private),
        migration_total_public: sector_index(world.baseline_public, enrolled_public),
        migration_total_private: sector_index(world.baseline_private, enrolled_private),
        seg_count_index: metrics::count_segregation_index(&groups).unwrap_or(0.0),
        seg_wealth_index: metrics::wealth_segregation_index(&groups).unwrap_or(0.0),
        avg_wealth_public: avg_wealth(Sector::Public),
        avg_wealth_private: avg_wealth(Sector::Private),
        enrolled_public,
        enrolled_private,
        out_of_school: world.out_of_school(),
        retired: world.retired(),
        gini_wealth: metrics::gini_or_zero(active.iter().map(|s| s.wealth)),
        gini_grades: metrics::gini_or_zero(active.iter().map(|s| s.grades)),
    }
}

/// Run one school year.
pub fn step(world: &mut WorldState) -> Result<TickMetrics> {
    if world.is_finished() {
        return Err(Error::Finished {
            tick: world.tick,
            max_ticks: world.params.max_ticks,
        });
    }
    let tick = world.tick + 1;
    world.prev_enrollment = world.enrollment();

    if world.params.tip_mode {
        get_enrolled_tip(world, tick)?;
    } else {
        get_enrolled_ses(world)?;
    }

    let removal = world.params.teacher_removal;
    for s in &mut world.schools {
        s.recompute_class_size();
        induct_teacher(s, tick, removal);
    }

    age_and_retire(world)?;

    for s in &mut world.schools {
        s.recompute_class_size();
    }
    pay_salaries(world);
    calculate_rank_ses(world);

    world.tick = tick;
    Ok(observe(world))
}

/// Run to `max_ticks`, returning one metrics record per tick.
pub fn run(world: &mut WorldState) -> Result<Vec<TickMetrics>> {
    let mut out = Vec::with_capacity((world.params.max_ticks - world.tick) as usize);
    while !world.is_finished() {
        out.push(step(world)?);
    }
    Ok(out)
}
