from StrategicDynamics.game_model import GameParameters, get_scenario, check_low_dominance
from StrategicDynamics.dynamics import integrate
from StrategicDynamics.metrics import annotate_trajectory

# ============================================================
#
# Simulate one trajectory and look at the classifier metrics.
#
# ============================================================
params = GameParameters()  # lambda=50, rho=10, b=50, c_F=1, c_I=5, p_G=0.5, r=1
baseline = get_scenario("baseline")

traj = integrate((0.5, 0.5, 0.5), baseline, params, t_end=100)
print(traj.final)  # High institutions, adapting Good users, faking Bad users

frame = annotate_trajectory(traj)
print(frame[["t", "tp", "tn", "fp", "fn", "social_cost"]].tail())

# the Low threshold is dominated in every built-in scenario
for name in ("baseline", "manipulation_proof", "recourse"):
    print(name, check_low_dominance(get_scenario(name), params).passed)


# ============================================================
#
# Fixed points and basins of attraction.
#
# ============================================================
from StrategicDynamics.stability import enumerate_fixed_points, pg_star
from StrategicDynamics.basins import basin_sizes

# (M,NA,F) is stable once the share of Good users exceeds pg_star
print(pg_star(params))

strong_prior = params.replace(p_g=0.85, rho=20)
for report in enumerate_fixed_points(baseline, strong_prior):
    print(report.label, report.kind.value, report.classification.value)

basins = basin_sizes(baseline, strong_prior, n_per_axis=20, threads=4)
print(basins.fractions)


# ============================================================
#
# Cycles under recourse.
#
# ============================================================
from StrategicDynamics.cycles import detect_cycle, cycle_census
from StrategicDynamics.helpers import emit_report

recourse = get_scenario("recourse")
cycle = detect_cycle(integrate((0.85, 0.5, 0.1), recourse, params, t_end=50))
print(cycle.period, cycle.time_average, cycle.analytic_center)

census = cycle_census(recourse, params, n_random=200, seed=0, threads=4)
print(f"{census.fraction:.2%} of random starts cycle")

# you can find the report in the 'output' folder
emit_report(census, "json", "output/recourse_cycles.json")
