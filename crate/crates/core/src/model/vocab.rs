//! Symbolic vocabulary shared by the fuzz space, test documents and the simulator.
//!
//! Every enum here parses case-insensitively and accepts the spellings found in
//! operator material ("ALTCTRL", "TAKING-OFF", "Maximum HIGH", "+1" ...). Each
//! value renders back to a single canonical token.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Uppercases and collapses whitespace/underscores into single dashes.
pub(crate) fn normalize_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_dash = false;
    for ch in raw.trim().chars() {
        if ch == '-' && out.is_empty() {
            out.push('-');
            continue;
        }
        if ch.is_whitespace() || ch == '_' || ch == '-' {
            pending_dash = !out.is_empty();
            continue;
        }
        if pending_dash {
            out.push('-');
            pending_dash = false;
        }
        out.extend(ch.to_uppercase());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownToken {
    pub kind: &'static str,
    pub value: String,
}

impl fmt::Display for UnknownToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown {} `{}`", self.kind, self.value)
    }
}

impl std::error::Error for UnknownToken {}

macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $kind:literal {
            $( $variant:ident => $canon:literal $(| $alias:literal)* ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $( $variant ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[ $( $name::$variant ),+ ];

            pub fn as_str(self) -> &'static str {
                match self {
                    $( $name::$variant => $canon ),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let norm = normalize_token(s);
                $(
                    if norm == normalize_token($canon) $(|| norm == normalize_token($alias))* {
                        return Ok($name::$variant);
                    }
                )+
                Err(UnknownToken { kind: $kind, value: s.to_string() })
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let raw = String::deserialize(deserializer)?;
                raw.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

token_enum! {
    /// Autopilot control regime.
    Mode, "flight mode" {
        Stabilized => "STABILIZED" | "STAB" | "MANUAL-STABILIZED",
        Altctl => "ALTCTL" | "ALTCTRL" | "ALTHOLD" | "ALTITUDE",
        Posctl => "POSCTL" | "POSCTRL" | "POSITION" | "POSHOLD",
        Offboard => "OFFBOARD",
        AutoLoiter => "AUTO.LOITER" | "LOITER" | "HOLD",
        AutoRtl => "AUTO.RTL" | "RTL" | "RETURN",
        AutoLand => "AUTO.LAND" | "LAND",
    }
}

impl Mode {
    /// Modes in which the RC throttle stick drives the vertical axis.
    pub fn is_manual(self) -> bool {
        matches!(self, Mode::Stabilized | Mode::Altctl | Mode::Posctl)
    }
}

token_enum! {
    /// Flight life-cycle state.
    Lifecycle, "lifecycle state" {
        PreArm => "PRE-ARM" | "PREARM" | "DISARMED",
        Arm => "ARM" | "ARMED" | "ARMING",
        Takeoff => "TAKEOFF" | "TAKE-OFF" | "TAKING-OFF",
        Fly => "FLY" | "FLYING",
        Hover => "HOVER" | "HOVERING",
        Land => "LAND" | "LANDING",
    }
}

impl Lifecycle {
    pub fn on_ground(self) -> bool {
        matches!(self, Lifecycle::PreArm | Lifecycle::Arm)
    }
}

token_enum! {
    /// Symbolic RC throttle stick position.
    Throttle, "throttle position" {
        MaxHigh => "MAX-HIGH" | "MAXIMUM-HIGH" | "+1" | "1" | "+1.0" | "HIGH+",
        MedHigh => "MED-HIGH" | "MEDIUM-HIGH" | "+0.5" | "0.5" | "MID+" | "MED+",
        JustAbove => "JUST-ABOVE" | "JUST-ABOVE-NEUTRAL" | "+0.1" | "0.1" | "LOW+",
        Neutral => "NEUTRAL" | "0" | "0.0" | "+0",
        JustBelow => "JUST-BELOW" | "JUST-BELOW-NEUTRAL" | "-0.1" | "LOW-",
        MedLow => "MED-LOW" | "MEDIUM-LOW" | "-0.5" | "MID-",
        MaxLow => "MAX-LOW" | "MAXIMUM-LOW" | "-1" | "-1.0",
    }
}

impl Throttle {
    /// Normalized stick level in [-1, +1].
    pub fn level(self) -> f64 {
        match self {
            Throttle::MaxHigh => 1.0,
            Throttle::MedHigh => 0.5,
            Throttle::JustAbove => 0.1,
            Throttle::Neutral => 0.0,
            Throttle::JustBelow => -0.1,
            Throttle::MedLow => -0.5,
            Throttle::MaxLow => -1.0,
        }
    }

    /// Numeric spelling used in task text ("MOVE THROTTLE TO +1").
    pub fn signed_label(self) -> &'static str {
        match self {
            Throttle::MaxHigh => "+1",
            Throttle::MedHigh => "+0.5",
            Throttle::JustAbove => "+0.1",
            Throttle::Neutral => "0",
            Throttle::JustBelow => "-0.1",
            Throttle::MedLow => "-0.5",
            Throttle::MaxLow => "-1",
        }
    }
}

token_enum! {
    Switch, "on/off value" {
        On => "ON" | "YES" | "TRUE" | "ENABLED",
        Off => "OFF" | "NO" | "FALSE" | "DISABLED",
    }
}

impl Default for Switch {
    fn default() -> Self {
        Switch::Off
    }
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Switch::On
    }
}

token_enum! {
    /// Failsafe performed on geofence breach, numbered as in the autopilot parameter.
    GeofenceAction, "geofence action" {
        None => "NONE" | "0" | "0: NONE",
        Warning => "WARNING" | "WARN" | "1" | "1: WARNING",
        Hold => "HOLD" | "HOLD-MODE" | "LOITER" | "2" | "2: HOLD MODE",
        Return => "RETURN" | "RETURN-MODE" | "RTL" | "3" | "3: RETURN MODE",
        Terminate => "TERMINATE" | "4" | "4: TERMINATE",
        Land => "LAND" | "LAND-MODE" | "5" | "5: LAND MODE",
    }
}

impl Default for GeofenceAction {
    fn default() -> Self {
        GeofenceAction::None
    }
}

impl GeofenceAction {
    pub fn code(self) -> u8 {
        self as u8
    }
}

token_enum! {
    /// Kind of human interaction task.
    TaskKind, "task kind" {
        ChangeMode => "CHANGE-MODE" | "SET-MODE",
        MoveThrottle => "MOVE-THROTTLE",
        KillMotors => "KILL-MOTORS" | "KILL-SWITCH",
        PressRtl => "PRESS-RTL" | "PRESS-RTL-BUTTON",
        PressLand => "PRESS-LAND" | "PRESS-LAND-BUTTON",
    }
}

/// A concrete human interaction task: kind plus argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    ChangeMode(Mode),
    MoveThrottle(Throttle),
    KillMotors,
    PressRtl,
    PressLand,
}

impl Task {
    pub fn kind(self) -> TaskKind {
        match self {
            Task::ChangeMode(_) => TaskKind::ChangeMode,
            Task::MoveThrottle(_) => TaskKind::MoveThrottle,
            Task::KillMotors => TaskKind::KillMotors,
            Task::PressRtl => TaskKind::PressRtl,
            Task::PressLand => TaskKind::PressLand,
        }
    }

    /// Mode the task switches the vehicle into, if any.
    pub fn induced_mode(self) -> Option<Mode> {
        match self {
            Task::ChangeMode(m) => Some(m),
            Task::PressRtl => Some(Mode::AutoRtl),
            Task::PressLand => Some(Mode::AutoLand),
            Task::MoveThrottle(_) | Task::KillMotors => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::ChangeMode(m) => write!(f, "SET MODE TO {m}"),
            Task::MoveThrottle(t) => write!(f, "MOVE THROTTLE TO {}", t.signed_label()),
            Task::KillMotors => f.write_str("KILL MOTORS"),
            Task::PressRtl => f.write_str("PRESS RTL BUTTON"),
            Task::PressLand => f.write_str("PRESS LAND BUTTON"),
        }
    }
}

impl FromStr for Task {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownToken {
            kind: "task",
            value: s.to_string(),
        };
        let upper = s.trim().to_uppercase();
        let words: Vec<&str> = upper.split_whitespace().collect();
        let tail_after = |prefix: &[&str]| -> Option<String> {
            if words.len() > prefix.len() && words[..prefix.len()] == *prefix {
                Some(words[prefix.len()..].join(" "))
            } else {
                None
            }
        };
        for prefix in [&["SET", "MODE", "TO"][..], &["CHANGE", "MODE", "TO"], &["CHANGE-MODE"]] {
            if let Some(arg) = tail_after(prefix) {
                return arg.parse().map(Task::ChangeMode).map_err(|_| err());
            }
        }
        for prefix in [&["MOVE", "THROTTLE", "TO"][..], &["MOVE-THROTTLE"]] {
            if let Some(arg) = tail_after(prefix) {
                return arg.parse().map(Task::MoveThrottle).map_err(|_| err());
            }
        }
        match normalize_token(s).as_str() {
            "KILL-MOTORS" | "KILL-SWITCH" | "PRESS-KILL-SWITCH" => Ok(Task::KillMotors),
            "PRESS-RTL-BUTTON" | "PRESS-RTL" => Ok(Task::PressRtl),
            "PRESS-LAND-BUTTON" | "PRESS-LAND" => Ok(Task::PressLand),
            _ => Err(err()),
        }
    }
}

impl Serialize for Task {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

token_enum! {
    /// Wind origin. A northerly wind blows from the north.
    Compass, "wind direction" {
        North => "NORTH" | "N" | "NORTHERLY",
        NorthEast => "NORTHEAST" | "NE" | "NORTHEASTERLY",
        East => "EAST" | "E" | "EASTERLY",
        SouthEast => "SOUTHEAST" | "SE" | "SOUTHEASTERLY",
        South => "SOUTH" | "S" | "SOUTHERLY",
        SouthWest => "SOUTHWEST" | "SW" | "SOUTHWESTERLY",
        West => "WEST" | "W" | "WESTERLY",
        NorthWest => "NORTHWEST" | "NW" | "NORTHWESTERLY",
    }
}

impl Compass {
    /// Unit vector (east, north) pointing where the air moves *to*.
    pub fn downwind(self) -> (f64, f64) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Compass::North => (0.0, -1.0),
            Compass::NorthEast => (-h, -h),
            Compass::East => (-1.0, 0.0),
            Compass::SouthEast => (-h, h),
            Compass::South => (0.0, 1.0),
            Compass::SouthWest => (h, h),
            Compass::West => (1.0, 0.0),
            Compass::NorthWest => (h, -h),
        }
    }
}

/// Wind speed: a symbolic class or an explicit knot value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindSpeed {
    Calm,
    Medium,
    High,
    Knots(u32),
}

impl fmt::Display for WindSpeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindSpeed::Calm => f.write_str("NONE"),
            WindSpeed::Medium => f.write_str("MEDIUM"),
            WindSpeed::High => f.write_str("HIGH"),
            WindSpeed::Knots(k) => write!(f, "{k}KTS"),
        }
    }
}

impl FromStr for WindSpeed {
    type Err = UnknownToken;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_token(s);
        match norm.as_str() {
            "NONE" | "CALM" | "0" => return Ok(WindSpeed::Calm),
            "MEDIUM" | "MED" => return Ok(WindSpeed::Medium),
            "HIGH" => return Ok(WindSpeed::High),
            _ => {}
        }
        let digits = norm
            .strip_suffix("KTS")
            .or_else(|| norm.strip_suffix("KT"))
            .map(|d| d.trim_end_matches('-'));
        match digits.and_then(|d| d.parse::<u32>().ok()) {
            Some(0) => Ok(WindSpeed::Calm),
            Some(k) => Ok(WindSpeed::Knots(k)),
            None => Err(UnknownToken {
                kind: "wind speed",
                value: s.to_string(),
            }),
        }
    }
}

/// Environmental wind: speed class plus the direction it blows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Wind {
    pub speed: WindSpeed,
    pub direction: Compass,
}

impl Wind {
    pub const CALM: Wind = Wind {
        speed: WindSpeed::Calm,
        direction: Compass::North,
    };

    pub fn is_calm(&self) -> bool {
        self.speed == WindSpeed::Calm
    }

    /// Compact label such as `MEDIUM NORTH` or `NONE`.
    pub fn label(&self) -> String {
        if self.is_calm() {
            "NONE".to_string()
        } else {
            format!("{} {}", self.speed, self.direction)
        }
    }
}

impl fmt::Display for Wind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Wind {
    type Err = UnknownToken;

    /// Parses labels such as `Medium Northerly`, `20KTS NORTH` or `NONE`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownToken {
            kind: "wind",
            value: s.to_string(),
        };
        let parts: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == '_' || c == ':').filter(|p| !p.is_empty()).collect();
        match parts.as_slice() {
            [speed] => match speed.parse::<WindSpeed>() {
                Ok(WindSpeed::Calm) => Ok(Wind::CALM),
                _ => Err(err()),
            },
            [speed, direction] => {
                let speed: WindSpeed = speed.parse().map_err(|_| err())?;
                let direction: Compass = direction.parse().map_err(|_| err())?;
                if speed == WindSpeed::Calm {
                    return Ok(Wind::CALM);
                }
                Ok(Wind { speed, direction })
            }
            _ => Err(err()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_resolve_to_canonical_tokens() {
        assert_eq!("ALTCTRL".parse::<Mode>().unwrap(), Mode::Altctl);
        assert_eq!("auto.rtl".parse::<Mode>().unwrap(), Mode::AutoRtl);
        assert_eq!("TAKING-OFF".parse::<Lifecycle>().unwrap(), Lifecycle::Takeoff);
        assert_eq!("Pre-arm".parse::<Lifecycle>().unwrap(), Lifecycle::PreArm);
        assert_eq!("Maximum HIGH".parse::<Throttle>().unwrap(), Throttle::MaxHigh);
        assert_eq!("Just below neutral".parse::<Throttle>().unwrap(), Throttle::JustBelow);
        assert_eq!("0: None".parse::<GeofenceAction>().unwrap(), GeofenceAction::None);
        assert_eq!("5: Land mode".parse::<GeofenceAction>().unwrap(), GeofenceAction::Land);
        assert!("CRUISE".parse::<Lifecycle>().is_err());
    }

    #[test]
    fn task_text_round_trips() {
        for text in ["SET MODE TO STABILIZED", "MOVE THROTTLE TO +1", "KILL MOTORS", "PRESS RTL BUTTON"] {
            let task: Task = text.parse().unwrap();
            assert_eq!(task.to_string(), text);
        }
        assert_eq!("move throttle to -0.5".parse::<Task>().unwrap(), Task::MoveThrottle(Throttle::MedLow));
        assert!("DANCE".parse::<Task>().is_err());
    }

    #[test]
    fn wind_labels() {
        let w: Wind = "Medium Northerly".parse().unwrap();
        assert_eq!(w, Wind { speed: WindSpeed::Medium, direction: Compass::North });
        assert_eq!("20KTS".parse::<WindSpeed>().unwrap(), WindSpeed::Knots(20));
        assert_eq!("NONE".parse::<Wind>().unwrap(), Wind::CALM);
        assert_eq!(Compass::North.downwind(), (0.0, -1.0));
    }

    #[test]
    fn every_canonical_token_parses_back() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), *m);
        }
        for t in Throttle::ALL {
            assert_eq!(t.as_str().parse::<Throttle>().unwrap(), *t);
            assert_eq!(t.signed_label().parse::<Throttle>().unwrap(), *t);
        }
        for a in GeofenceAction::ALL {
            assert_eq!(a.as_str().parse::<GeofenceAction>().unwrap(), *a);
        }
    }
}
