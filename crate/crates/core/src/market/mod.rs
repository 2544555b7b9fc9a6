//! Constituent capitalization panels and portfolio/factor construction.
//!
//! From a per-firm capitalization panel this module builds
//!
//! * the capitalization-weighted index price `p(t) = K(t)/K_B * base_value`,
//! * the equal-weighted price `p_e(t) = p(t0) * exp(sum of r_e(i))` where
//!   `r_e(i)` is the mean log-capitalization return over firms listed at both
//!   `i` and `i-1`,
//! * the integrated Zipf factor `zeta(t) = ln p(t) - ln p_e(t)`, normalized so
//!   the two prices coincide at the day preceding the fit window.
//!
//! Index rules: a delisted firm leaves the total capitalization from its
//! delisting day onward; a suspended firm keeps contributing its last active
//! capitalization. All times are integer trading-day indices; calendar dates
//! are metadata.

mod csv_io;

pub use csv_io::{
    load_panel, read_factor_csv, read_index_csv, write_factor_csv, write_panel_csv, PanelFormat,
};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Listing state of one firm on one trading day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListingStatus {
    Active,
    Suspended,
    Delisted,
    /// Not (yet) part of the index, or a data hole.
    Unlisted,
}

/// One firm-day observation, the unit the CSV loader produces.
#[derive(Debug, Clone)]
pub struct PanelRow {
    pub date: NaiveDate,
    pub firm: String,
    pub cap: Option<f64>,
    pub status: ListingStatus,
    /// 1-based source line, for error messages.
    pub line: u64,
}

/// Per-firm total capitalization per trading day, with listing status.
///
/// Invariants enforced at construction: dates strictly increasing, positive
/// capitalization wherever a firm is active or suspended, and no firm ever
/// returns from delisting.
#[derive(Debug, Clone)]
pub struct ConstituentPanel {
    dates: Vec<NaiveDate>,
    firms: Vec<String>,
    cap: Vec<Vec<f64>>,             // [firm][day], NaN where absent
    status: Vec<Vec<ListingStatus>>, // [firm][day]
    frozen_cap: Vec<Vec<f64>>,      // [firm][day]: last active cap carried forward
}

impl ConstituentPanel {
    /// Assemble and validate a panel from loose firm-day rows.
    ///
    /// `origin` names the data source in error messages.
    pub fn from_rows(rows: Vec<PanelRow>, origin: &str) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation(format!("{origin}: no data rows")));
        }

        let mut dates: Vec<NaiveDate> = rows.iter().map(|r| r.date).collect();
        dates.sort_unstable();
        dates.dedup();

        let mut firms: Vec<String> = Vec::new();
        let mut firm_idx = std::collections::HashMap::new();
        for r in &rows {
            if !firm_idx.contains_key(r.firm.as_str()) {
                firm_idx.insert(r.firm.clone(), firms.len());
                firms.push(r.firm.clone());
            }
        }

        let date_idx: std::collections::HashMap<NaiveDate, usize> =
            dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();

        let n_days = dates.len();
        let n_firms = firms.len();
        let mut cap = vec![vec![f64::NAN; n_days]; n_firms];
        let mut status = vec![vec![ListingStatus::Unlisted; n_days]; n_firms];
        let mut seen = vec![vec![false; n_days]; n_firms];

        for r in rows {
            let j = firm_idx[r.firm.as_str()];
            let i = date_idx[&r.date];
            if seen[j][i] {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: r.line,
                    msg: format!("duplicate row for firm {} on {}", r.firm, r.date),
                });
            }
            seen[j][i] = true;
            status[j][i] = r.status;
            if let Some(c) = r.cap {
                cap[j][i] = c;
            }
        }

        // Monotone delisting: absent days after an explicit delisting stay
        // delisted; an explicit return to active/suspended is rejected.
        for j in 0..n_firms {
            let mut delisted = false;
            for i in 0..n_days {
                match status[j][i] {
                    ListingStatus::Delisted => delisted = true,
                    ListingStatus::Unlisted if delisted => status[j][i] = ListingStatus::Delisted,
                    ListingStatus::Active | ListingStatus::Suspended if delisted => {
                        return Err(Error::Validation(format!(
                            "{origin}: firm {} re-listed on {} after delisting",
                            firms[j], dates[i]
                        )));
                    }
                    _ => {}
                }
                if matches!(status[j][i], ListingStatus::Active | ListingStatus::Suspended) {
                    let c = cap[j][i];
                    if !(c.is_finite() && c > 0.0) {
                        return Err(Error::Validation(format!(
                            "{origin}: firm {} has non-positive or missing capitalization on {}",
                            firms[j], dates[i]
                        )));
                    }
                }
            }
        }

        // Carry the last active capitalization forward for the suspension rule.
        let mut frozen_cap = vec![vec![f64::NAN; n_days]; n_firms];
        for j in 0..n_firms {
            let mut last_active = f64::NAN;
            for i in 0..n_days {
                if status[j][i] == ListingStatus::Active {
                    last_active = cap[j][i];
                }
                frozen_cap[j][i] = last_active;
            }
        }

        Ok(ConstituentPanel { dates, firms, cap, status, frozen_cap })
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn firms(&self) -> &[String] {
        &self.firms
    }

    pub fn status(&self, firm: usize, day: usize) -> ListingStatus {
        self.status[firm][day]
    }

    /// Raw capitalization as stored, if present.
    pub fn cap(&self, firm: usize, day: usize) -> Option<f64> {
        let c = self.cap[firm][day];
        c.is_finite().then_some(c)
    }

    /// Capitalization the firm contributes to the index total on `day`:
    /// its own when active, the last active one when suspended (falling back to
    /// the stored value for a firm suspended since listing), none when delisted
    /// or unlisted.
    pub fn contributed_cap(&self, firm: usize, day: usize) -> Option<f64> {
        match self.status[firm][day] {
            ListingStatus::Active => Some(self.cap[firm][day]),
            ListingStatus::Suspended => {
                let frozen = self.frozen_cap[firm][day];
                Some(if frozen.is_finite() { frozen } else { self.cap[firm][day] })
            }
            ListingStatus::Delisted | ListingStatus::Unlisted => None,
        }
    }

    /// Total market capitalization on `day` under the index rules.
    pub fn total_cap(&self, day: usize) -> Result<f64> {
        let mut total = 0.0;
        let mut n = 0usize;
        for j in 0..self.n_firms() {
            if let Some(c) = self.contributed_cap(j, day) {
                total += c;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::Validation(format!(
                "no listed constituent on {} (day {day})",
                self.dates[day]
            )));
        }
        Ok(total)
    }
}

/// Capitalization-weighted index price over all panel days:
/// `p(i) = total_cap(i) / base_cap * base_value`.
pub fn index_price(panel: &ConstituentPanel, base_cap: f64, base_value: f64) -> Result<Vec<f64>> {
    if !(base_cap > 0.0) {
        return Err(Error::Validation(format!("base capitalization must be positive, got {base_cap}")));
    }
    (0..panel.n_days())
        .map(|i| Ok(panel.total_cap(i)? / base_cap * base_value))
        .collect()
}

/// Equal-weighted price over days `t1..=t2`, anchored at `p_t0` on day `t1 - 1`.
///
/// `r_e(i)` averages the log-capitalization returns of the firms active on both
/// `i` and `i-1`; membership changes, suspensions and data holes drop a firm
/// from the affected steps. Errors if some step has no eligible firm.
pub fn equal_weighted_price(
    panel: &ConstituentPanel,
    p_t0: f64,
    t1: usize,
    t2: usize,
) -> Result<Vec<f64>> {
    if !(p_t0 > 0.0) {
        return Err(Error::Validation(format!("anchor price must be positive, got {p_t0}")));
    }
    if t1 == 0 || t2 < t1 || t2 >= panel.n_days() {
        return Err(Error::Validation(format!(
            "equal-weighted window [{t1}, {t2}] must satisfy 1 <= t1 <= t2 < {}",
            panel.n_days()
        )));
    }
    let mut out = Vec::with_capacity(t2 - t1 + 1);
    let mut cum = 0.0;
    for i in t1..=t2 {
        let mut sum = 0.0;
        let mut members = 0usize;
        for j in 0..panel.n_firms() {
            if panel.status(j, i) == ListingStatus::Active
                && panel.status(j, i - 1) == ListingStatus::Active
            {
                sum += (panel.cap[j][i]).ln() - (panel.cap[j][i - 1]).ln();
                members += 1;
            }
        }
        if members == 0 {
            return Err(Error::Validation(format!(
                "no firm listed on both {} and {} (days {} and {i})",
                panel.dates[i - 1],
                panel.dates[i],
                i - 1
            )));
        }
        cum += sum / members as f64;
        out.push(p_t0 * cum.exp());
    }
    Ok(out)
}

/// Aligned log-price, equal-weighted log-price and integrated Zipf factor over a
/// fit window, normalized so both prices coincide on day `t0` (the day before
/// the window).
#[derive(Debug, Clone)]
pub struct FactorSeries {
    t0: i64,
    t0_date: NaiveDate,
    ln_p0: f64,
    days: Vec<i64>,
    dates: Vec<NaiveDate>,
    ln_p: Vec<f64>,
    ln_pe: Vec<f64>,
    zeta: Vec<f64>,
}

impl FactorSeries {
    /// Build from parallel vectors. `days` must run consecutively from `t0 + 1`,
    /// and `zeta` is recomputed as `ln_p - ln_pe` so the defining identity holds
    /// exactly.
    pub fn new(
        t0: i64,
        t0_date: NaiveDate,
        ln_p0: f64,
        days: Vec<i64>,
        dates: Vec<NaiveDate>,
        ln_p: Vec<f64>,
        ln_pe: Vec<f64>,
    ) -> Result<Self> {
        let n = days.len();
        if n < 2 {
            return Err(Error::Validation(format!(
                "factor series needs at least 2 days, got {n}"
            )));
        }
        if dates.len() != n || ln_p.len() != n || ln_pe.len() != n {
            return Err(Error::Validation("factor series vectors differ in length".into()));
        }
        for (k, &d) in days.iter().enumerate() {
            if d != t0 + 1 + k as i64 {
                return Err(Error::Validation(format!(
                    "trading days must be consecutive from {}: found {d} at offset {k}",
                    t0 + 1
                )));
            }
        }
        if !ln_p0.is_finite() {
            return Err(Error::Validation("non-finite anchor log-price".into()));
        }
        let zeta = ln_p.iter().zip(&ln_pe).map(|(p, pe)| p - pe).collect();
        Ok(FactorSeries { t0, t0_date, ln_p0, days, dates, ln_p, ln_pe, zeta })
    }

    /// Trading day preceding the window; `zeta` is zero there by construction.
    pub fn t0(&self) -> i64 {
        self.t0
    }

    pub fn t0_date(&self) -> NaiveDate {
        self.t0_date
    }

    /// Common log-price of both portfolios on day `t0`.
    pub fn ln_p0(&self) -> f64 {
        self.ln_p0
    }

    pub fn t1(&self) -> i64 {
        self.days[0]
    }

    pub fn t2(&self) -> i64 {
        *self.days.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn days(&self) -> &[i64] {
        &self.days
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn ln_p(&self) -> &[f64] {
        &self.ln_p
    }

    pub fn ln_pe(&self) -> &[f64] {
        &self.ln_pe
    }

    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    fn offset_of(&self, t: i64) -> Result<usize> {
        if t < self.t1() || t > self.t2() {
            return Err(Error::Validation(format!(
                "day {t} outside factor series range [{}, {}]",
                self.t1(),
                self.t2()
            )));
        }
        Ok((t - self.t1()) as usize)
    }

    /// Restrict to `[t1, t2]`, renormalizing the equal-weighted price so the new
    /// anchor day `t1 - 1` has zeta = 0. The renormalization only shifts
    /// `ln_pe`; the fitted gamma and the residuals of any calibration are
    /// unaffected (the shift is absorbed by the level parameter).
    pub fn restrict(&self, t1: i64, t2: i64) -> Result<FactorSeries> {
        if t1 > t2 {
            return Err(Error::Validation(format!("restrict: t1 = {t1} > t2 = {t2}")));
        }
        let new_t0 = t1 - 1;
        let (t0_date, ln_p0, zeta_shift) = if new_t0 == self.t0 {
            (self.t0_date, self.ln_p0, 0.0)
        } else {
            let k = self.offset_of(new_t0)?;
            (self.dates[k], self.ln_p[k], self.zeta[k])
        };
        let a = self.offset_of(t1)?;
        let b = self.offset_of(t2)?;
        FactorSeries::new(
            new_t0,
            t0_date,
            ln_p0,
            self.days[a..=b].to_vec(),
            self.dates[a..=b].to_vec(),
            self.ln_p[a..=b].to_vec(),
            self.ln_pe[a..=b].iter().map(|v| v + zeta_shift).collect(),
        )
    }

    /// Calendar date for a (possibly fractional) trading day.
    ///
    /// Inside the covered range this is the date of the nearest integer trading
    /// day. Beyond the last day the calendar is extrapolated with the series'
    /// mean calendar-days-per-trading-day, which is how predicted critical
    /// times are reported as dates.
    pub fn date_for_day(&self, t: f64) -> NaiveDate {
        let t2 = self.t2();
        if t <= t2 as f64 {
            let k = t.round() as i64;
            if k <= self.t0 {
                return self.t0_date;
            }
            return self.dates[(k - self.t1()) as usize];
        }
        let last = self.dates[self.dates.len() - 1];
        let span_cal = (last - self.t0_date).num_days() as f64;
        let span_trd = (t2 - self.t0) as f64;
        let per_day = span_cal / span_trd;
        let extra = ((t - t2 as f64) * per_day).round() as i64;
        last + chrono::Duration::days(extra.max(0))
    }
}

/// Construct the factor series for `[t1, t2]` from a panel and a full-length
/// index price vector (one price per panel day).
pub fn build_factor_series(
    panel: &ConstituentPanel,
    index: &[f64],
    t1: usize,
    t2: usize,
) -> Result<FactorSeries> {
    if index.len() != panel.n_days() {
        return Err(Error::Validation(format!(
            "index series has {} entries for {} panel days",
            index.len(),
            panel.n_days()
        )));
    }
    if t1 == 0 || t2 <= t1 || t2 >= panel.n_days() {
        return Err(Error::Validation(format!(
            "factor window [{t1}, {t2}] must satisfy 1 <= t1 < t2 < {}",
            panel.n_days()
        )));
    }
    let t0 = t1 - 1;
    let p_t0 = index[t0];
    if !(p_t0 > 0.0) {
        return Err(Error::Validation(format!("index price on day {t0} is not positive")));
    }
    for (i, &p) in index[t1..=t2].iter().enumerate() {
        if !(p > 0.0) {
            return Err(Error::Validation(format!(
                "index price on day {} is not positive",
                t1 + i
            )));
        }
    }
    let pe = equal_weighted_price(panel, p_t0, t1, t2)?;
    FactorSeries::new(
        t0 as i64,
        panel.dates[t0],
        p_t0.ln(),
        (t1 as i64..=t2 as i64).collect(),
        panel.dates[t1..=t2].to_vec(),
        index[t1..=t2].iter().map(|p| p.ln()).collect(),
        pe.iter().map(|p| p.ln()).collect(),
    )
}
