#include "uam/aero_energy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uam/errors.hpp"

namespace uam {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw SpecError(std::string("aircraft spec: ") + name + " must be a positive finite number");
  }
}

void require_nonnegative(double value, const char* name) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw SpecError(std::string("aircraft spec: ") + name + " must be non-negative and finite");
  }
}

double relative_deviation(double stored, double recomputed) {
  return std::abs(recomputed - stored) / std::abs(stored);
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace

void AircraftSpec::validate() const {
  if (max_passengers < 1) throw SpecError("aircraft spec: max_passengers must be at least 1");
  if (blade_count < 1) throw SpecError("aircraft spec: blade_count must be at least 1");
  require_positive(cruise_speed_mps, "cruise_speed_mps");
  require_positive(mass_kg, "mass_kg");
  require_nonnegative(weight_n, "weight_n");
  require_positive(rotor_radius_m, "rotor_radius_m");
  require_positive(disc_area_m2, "disc_area_m2");
  require_positive(rotor_solidity, "rotor_solidity");
  require_positive(blade_angular_velocity_rad_s, "blade_angular_velocity_rad_s");
  require_positive(tip_speed_mps, "tip_speed_mps");
  require_positive(air_density_kg_m3, "air_density_kg_m3");
  require_positive(fuselage_drag_ratio, "fuselage_drag_ratio");
  require_positive(mean_induced_velocity_mps, "mean_induced_velocity_mps");
  require_positive(profile_drag_coeff, "profile_drag_coeff");
  require_nonnegative(induced_power_factor, "induced_power_factor");
}

void BatterySpec::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw SpecError(std::string("battery spec: ") + name + " must be a positive finite number");
    }
  };
  positive(capacity_kwh, "capacity_kwh");
  positive(charge_per_journey_kwh, "charge_per_journey_kwh");
  positive(charge_time_per_journey_min, "charge_time_per_journey_min");
  positive(charger_power_kw, "charger_power_kw");
  positive(c_rate_per_hour, "c_rate_per_hour");
  positive(soc_full_time_min, "soc_full_time_min");
  const double delivered = charger_power_kw * charge_time_per_journey_min / 60.0;
  if (std::abs(delivered - charge_per_journey_kwh) > 1e-9 * charge_per_journey_kwh) {
    throw SpecError("battery spec: charger_power_kw x charge_time_per_journey_min must equal "
                    "charge_per_journey_kwh");
  }
  if (charge_per_journey_kwh > capacity_kwh) {
    throw SpecError("battery spec: charge_per_journey_kwh exceeds capacity_kwh");
  }
}

HoverPower hover_power(const AircraftSpec& spec) {
  spec.validate();
  const double rho = spec.air_density_kg_m3;
  const double area = spec.disc_area_m2;
  const double omega = spec.blade_angular_velocity_rad_s;
  const double radius = spec.rotor_radius_m;

  HoverPower p;
  p.profile_w = spec.profile_drag_coeff / 8.0 * rho * spec.rotor_solidity * area *
                omega * omega * omega * radius * radius * radius;
  p.induced_w = (1.0 + spec.induced_power_factor) * std::pow(spec.weight_n, 1.5) /
                std::sqrt(2.0 * rho * area);
  p.total_w = p.profile_w + p.induced_w;
  return p;
}

CruisePower cruise_power(const AircraftSpec& spec, double speed_mps) {
  if (!(speed_mps >= 0.0) || !std::isfinite(speed_mps)) {
    throw DomainError("cruise_power: airspeed must be non-negative and finite");
  }
  const HoverPower hover = hover_power(spec);
  const double v2 = speed_mps * speed_mps;
  const double v0 = spec.mean_induced_velocity_mps;
  const double v0_2 = v0 * v0;
  const double utip = spec.tip_speed_mps;

  // sqrt(1 + x^2) - x with x = v^2/(2 v0^2); the rationalized form avoids
  // cancellation at high speed.
  const double x = v2 / (2.0 * v0_2);
  const double induced_ratio = 1.0 / (std::sqrt(1.0 + x * x) + x);

  CruisePower p;
  p.induced_w = hover.induced_w * std::sqrt(induced_ratio);
  p.profile_w = hover.profile_w * (1.0 + 3.0 * v2 / (utip * utip));
  p.parasite_w = 0.5 * spec.fuselage_drag_ratio * spec.air_density_kg_m3 * spec.rotor_solidity *
                 spec.disc_area_m2 * v2 * speed_mps;
  p.total_w = p.induced_w + p.profile_w + p.parasite_w;
  return p;
}

FlightPower flight_power(const AircraftSpec& spec) {
  FlightPower p;
  p.hover_w = hover_power(spec).total_w;
  p.cruise_w = cruise_power(spec, spec.cruise_speed_mps).total_w;
  p.cruise_speed_mps = spec.cruise_speed_mps;
  return p;
}

double step_energy_demand_kwh(HorizontalDisplacement displacement, bool vertical_transition,
                              double dt_s, const FlightPower& power, double climb_time_s) {
  if (!(dt_s > 0.0)) throw ContractError("step_energy: step duration must be positive");
  const double full_step = power.cruise_speed_mps * dt_s;
  const double moved2 = displacement.dx_m * displacement.dx_m + displacement.dy_m * displacement.dy_m;
  if (moved2 > full_step * full_step * (1.0 + 1e-12)) {
    throw ContractError("step_energy: horizontal displacement exceeds v*dt");
  }
  if (vertical_transition && moved2 > 0.0) {
    throw ContractError("step_energy: horizontal and vertical movement are mutually exclusive");
  }
  const double fraction = moved2 / (full_step * full_step);
  const double hover_s = vertical_transition ? std::min(climb_time_s, dt_s) : 0.0;
  const double joules = power.cruise_w * fraction * dt_s + power.hover_w * hover_s;
  return joules / kJoulesPerKwh;
}

EnergyState step_energy(EnergyState energy, HorizontalDisplacement displacement,
                        bool vertical_transition, double dt_s, const FlightPower& power,
                        double climb_time_s) {
  const double demand =
      step_energy_demand_kwh(displacement, vertical_transition, dt_s, power, climb_time_s);
  return EnergyState{std::max(energy.remaining_kwh - demand, 0.0)};
}

EnergyState step_energy(EnergyState energy, HorizontalDisplacement displacement,
                        bool vertical_transition, double dt_s, const AircraftSpec& spec,
                        const BatterySpec& battery, double climb_time_s) {
  battery.validate();
  EnergyState next = step_energy(energy, displacement, vertical_transition, dt_s,
                                 flight_power(spec), climb_time_s);
  next.remaining_kwh = std::min(next.remaining_kwh, battery.capacity_kwh);
  return next;
}

EnergyState charge(EnergyState energy, double grounded_duration_s, const BatterySpec& battery) {
  if (!(grounded_duration_s >= 0.0)) {
    throw ContractError("charge: grounded duration must be non-negative");
  }
  const double added = battery.charger_power_kw * grounded_duration_s / 3600.0;
  return EnergyState{std::min(energy.remaining_kwh + added, battery.capacity_kwh)};
}

const DerivedFieldReport& SpecDiagnostics::field(const std::string& name) const {
  for (const auto& f : fields) {
    if (f.field == name) return f;
  }
  throw UsageError("spec diagnostics: no field named " + name);
}

bool SpecDiagnostics::has_discrepancies() const {
  return std::any_of(fields.begin(), fields.end(), [](const DerivedFieldReport& f) {
    return f.status == DerivedFieldStatus::Discrepancy;
  });
}

SpecDiagnostics validate_spec(const AircraftSpec& spec) {
  const double pi = std::numbers::pi;
  const double r = spec.rotor_radius_m;

  auto report = [](std::string field, std::string formula, double stored, double recomputed,
                   int decimals) {
    DerivedFieldReport rep;
    rep.field = std::move(field);
    rep.formula = std::move(formula);
    rep.stored = stored;
    rep.recomputed = recomputed;
    rep.relative_deviation = relative_deviation(stored, recomputed);
    rep.printed_decimals = decimals;
    if (rep.relative_deviation < 1e-3) {
      rep.status = DerivedFieldStatus::Consistent;
    } else if (std::abs(round_to(recomputed, decimals) - stored) <= 1e-12 * std::abs(stored)) {
      rep.status = DerivedFieldStatus::Rounded;
    } else {
      rep.status = DerivedFieldStatus::Discrepancy;
    }
    return rep;
  };

  SpecDiagnostics d;
  d.fields.push_back(report("weight_n", "m*g", spec.weight_n, spec.mass_kg * kStandardGravity, 0));
  d.fields.push_back(report("disc_area_m2", "pi*R^2", spec.disc_area_m2, pi * r * r, 2));
  d.fields.push_back(report("rotor_solidity", "0.2231*b/(pi*R)", spec.rotor_solidity,
                            0.2231 * spec.blade_count / (pi * r), 4));
  d.fields.push_back(report("fuselage_drag_ratio", "0.0151/(s*A)", spec.fuselage_drag_ratio,
                            0.0151 / (spec.rotor_solidity * spec.disc_area_m2), 2));
  d.fields.push_back(report("tip_speed_mps", "Omega*R^2", spec.tip_speed_mps,
                            spec.blade_angular_velocity_rad_s * r * r, 3));
  d.fields.push_back(report("mean_induced_velocity_mps", "sqrt(W/(s*rho*A))",
                            spec.mean_induced_velocity_mps,
                            std::sqrt(spec.weight_n / (spec.rotor_solidity *
                                                       spec.air_density_kg_m3 *
                                                       spec.disc_area_m2)),
                            2));
  return d;
}

std::string to_string(DerivedFieldStatus status) {
  switch (status) {
    case DerivedFieldStatus::Consistent: return "consistent";
    case DerivedFieldStatus::Rounded: return "rounded";
    case DerivedFieldStatus::Discrepancy: return "discrepancy";
  }
  return "unknown";
}

}  // namespace uam
