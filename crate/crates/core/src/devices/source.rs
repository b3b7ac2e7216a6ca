use crate::netlist::Waveform;

use super::DeviceError;

/// Independent source waveform in scaled units (mV or µA over ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    pub waveform: Waveform,
}

impl Source {
    pub fn dc(value: f64) -> Self {
        Self {
            waveform: Waveform::Dc(value),
        }
    }

    pub fn pulse(v1: f64, v2: f64, td: f64, tr: f64, tf: f64, pw: f64, per: f64) -> Self {
        Self {
            waveform: Waveform::Pulse {
                v1,
                v2,
                td,
                tr,
                tf,
                pw,
                per,
            },
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        match self.waveform {
            Waveform::Dc(v) => {
                if !v.is_finite() {
                    return Err(DeviceError::NonFinite { param: "dc" });
                }
            }
            Waveform::Pulse {
                td,
                tr,
                tf,
                pw,
                per,
                ..
            } => {
                for (name, v) in [("td", td), ("tr", tr), ("tf", tf), ("pw", pw), ("per", per)] {
                    if !v.is_finite() {
                        return Err(DeviceError::NonFinite { param: name });
                    }
                    if v < 0.0 {
                        return Err(DeviceError::Negative {
                            param: name,
                            value: v,
                        });
                    }
                }
                if per > 0.0 && per < tr + pw + tf {
                    return Err(DeviceError::NotPositive {
                        param: "per - (tr + pw + tf)",
                        value: per - (tr + pw + tf),
                    });
                }
            }
        }
        Ok(())
    }

    /// Value at rest, before any pulse starts.
    pub fn dc_value(&self) -> f64 {
        match self.waveform {
            Waveform::Dc(v) => v,
            Waveform::Pulse { v1, .. } => v1,
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.waveform {
            Waveform::Dc(v) => v,
            Waveform::Pulse {
                v1,
                v2,
                td,
                tr,
                tf,
                pw,
                per,
            } => {
                // A pulse starting at td is still at v1 at td, even with tr = 0.
                if t <= td {
                    return v1;
                }
                let mut local = t - td;
                if per > 0.0 {
                    local %= per;
                }
                if local < tr {
                    v1 + (v2 - v1) * local / tr
                } else if local < tr + pw {
                    v2
                } else if local < tr + pw + tf {
                    v2 + (v1 - v2) * (local - tr - pw) / tf
                } else {
                    v1
                }
            }
        }
    }

    /// Corner times of the waveform inside `(0, tstop]`, ascending.
    pub fn breakpoints(&self, tstop: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if let Waveform::Pulse {
            td,
            tr,
            tf,
            pw,
            per,
            ..
        } = self.waveform
        {
            let mut start = td;
            loop {
                for t in [start, start + tr, start + tr + pw, start + tr + pw + tf] {
                    if t > 0.0 && t <= tstop {
                        out.push(t);
                    }
                }
                if per <= 0.0 || start > tstop {
                    break;
                }
                start += per;
            }
        }
        out.dedup();
        out
    }

    /// Rising-edge start times of pulses beginning before `tstop`.
    pub fn pulse_starts(&self, tstop: f64) -> Vec<f64> {
        match self.waveform {
            Waveform::Dc(_) => Vec::new(),
            Waveform::Pulse { td, per, .. } => {
                let mut out = Vec::new();
                let mut t = td;
                while t < tstop {
                    out.push(t);
                    if per <= 0.0 {
                        break;
                    }
                    t += per;
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_shape() {
        let s = Source::pulse(0.0, 0.8, 10.0, 1.0, 1.0, 3.0, 120.0);
        assert_eq!(s.value_at(0.0), 0.0);
        assert_eq!(s.value_at(10.5), 0.4);
        assert_eq!(s.value_at(12.0), 0.8);
        assert!((s.value_at(14.5) - 0.4).abs() < 1e-12);
        assert_eq!(s.value_at(20.0), 0.0);
        assert_eq!(s.value_at(132.0), 0.8);
        assert_eq!(s.pulse_starts(250.0), vec![10.0, 130.0]);
        let bps = s.breakpoints(130.0);
        assert_eq!(bps, vec![10.0, 11.0, 14.0, 15.0, 130.0]);
    }

    #[test]
    fn single_pulse() {
        let s = Source::pulse(1.0, 2.0, 0.0, 0.0, 0.0, 5.0, 0.0);
        assert_eq!(s.value_at(1.0), 2.0);
        assert_eq!(s.value_at(6.0), 1.0);
        assert_eq!(s.pulse_starts(100.0), vec![0.0]);
        assert!(s.validate().is_ok());
        assert!(Source::pulse(0.0, 1.0, 0.0, 1.0, 1.0, 5.0, 3.0)
            .validate()
            .is_err());
    }
}
