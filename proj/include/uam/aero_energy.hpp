#pragma once

#include <string>
#include <vector>

namespace uam {

constexpr double kJoulesPerKwh = 3.6e6;
constexpr double kStandardGravity = 9.80665;

// Rotorcraft airframe and rotor constants. Defaults are the Joby S4 values.
// Derived quantities (disc area, solidity, drag ratio, tip speed, induced
// velocity) are stored as tabulated; validate_spec() re-derives them.
struct AircraftSpec {
  int max_passengers = 4;
  double cruise_speed_mps = 73.762;
  double mass_kg = 1815.0;
  double weight_n = 17799.0;
  double rotor_radius_m = 1.45;
  double disc_area_m2 = 6.61;
  int blade_count = 5;
  double rotor_solidity = 0.2449;
  double blade_angular_velocity_rad_s = 78.0;
  double tip_speed_mps = 112.776;
  double air_density_kg_m3 = 1.225;
  double fuselage_drag_ratio = 0.01;
  double mean_induced_velocity_mps = 26.45;
  double profile_drag_coeff = 0.045;
  double induced_power_factor = 0.052;

  // Throws SpecError. Weight and the induced-power factor may be zero (the
  // induced term then vanishes); every other field must be strictly positive.
  void validate() const;
};

struct BatterySpec {
  double capacity_kwh = 150.0;
  double charge_per_journey_kwh = 30.0;
  double charge_time_per_journey_min = 5.0;
  double charger_power_kw = 360.0;
  double c_rate_per_hour = 2.4;
  double soc_full_time_min = 25.0;

  void validate() const;
};

// Remaining battery energy of one aircraft, 0 <= remaining_kwh <= capacity.
struct EnergyState {
  double remaining_kwh = 0.0;

  friend bool operator==(const EnergyState&, const EnergyState&) = default;
};

struct HoverPower {
  double profile_w = 0.0;  // blade profile term
  double induced_w = 0.0;
  double total_w = 0.0;
};

struct CruisePower {
  double induced_w = 0.0;
  double profile_w = 0.0;
  double parasite_w = 0.0;
  double total_w = 0.0;
};

HoverPower hover_power(const AircraftSpec& spec);

// Forward-flight power at airspeed speed_mps (>= 0, DomainError otherwise).
CruisePower cruise_power(const AircraftSpec& spec, double speed_mps);

// Hover and cruise power at the spec's cruise speed, computed once and
// reused by the per-step energy bookkeeping.
struct FlightPower {
  double hover_w = 0.0;
  double cruise_w = 0.0;
  double cruise_speed_mps = 0.0;
};

FlightPower flight_power(const AircraftSpec& spec);

struct HorizontalDisplacement {
  double dx_m = 0.0;
  double dy_m = 0.0;
};

// Energy drawn during one step: cruise power scaled by the squared fraction
// of a full-speed step flown, plus hover power for climb_time_s (capped at
// dt_s) when the step is a vertical transition. The power sum is multiplied
// by the step duration to obtain energy; the result clamps at empty.
//
// Horizontal movement and a vertical transition in the same step, or a
// displacement longer than v*dt, throw ContractError.
EnergyState step_energy(EnergyState energy, HorizontalDisplacement displacement,
                        bool vertical_transition, double dt_s,
                        const FlightPower& power, double climb_time_s = 30.0);

EnergyState step_energy(EnergyState energy, HorizontalDisplacement displacement,
                        bool vertical_transition, double dt_s,
                        const AircraftSpec& spec, const BatterySpec& battery,
                        double climb_time_s = 30.0);

// Energy in kWh that step_energy() would remove before clamping.
double step_energy_demand_kwh(HorizontalDisplacement displacement, bool vertical_transition,
                              double dt_s, const FlightPower& power,
                              double climb_time_s = 30.0);

// Linear charger model, clamped at capacity.
EnergyState charge(EnergyState energy, double grounded_duration_s, const BatterySpec& battery);

enum class DerivedFieldStatus {
  Consistent,   // recomputed value within 0.1% of the stored one
  Rounded,      // differs, but rounds to the stored value at its printed precision
  Discrepancy,  // formula and stored value disagree; stored value is used
};

struct DerivedFieldReport {
  std::string field;
  std::string formula;
  double stored = 0.0;
  double recomputed = 0.0;
  double relative_deviation = 0.0;
  int printed_decimals = 0;
  DerivedFieldStatus status = DerivedFieldStatus::Consistent;
};

struct SpecDiagnostics {
  std::vector<DerivedFieldReport> fields;

  const DerivedFieldReport& field(const std::string& name) const;
  bool has_discrepancies() const;
};

// Recomputes the derived rows of the airframe table from the base fields
// and compares them to the stored values. Never mutates the spec.
SpecDiagnostics validate_spec(const AircraftSpec& spec);

std::string to_string(DerivedFieldStatus status);

}  // namespace uam
