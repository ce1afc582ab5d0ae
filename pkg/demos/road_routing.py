"""Route a road between two fixed endpoints around obstacles.

Five wells sit between the endpoints. A road pays for its own length plus,
for each well, the distance from the well to the road (its feeder pipe).
Crossing an obstacle is infinitely expensive. The baseline threads the road
through every well; the GA usually finds a shorter compromise.
"""

import numpy as np

from polydesign.estimators import RoadCostEstimator, road_cost, through_wells_baseline
from polydesign.optimizers import GAConfig, Variation, ga_run
from polydesign.problems import road_problem
from polydesign.sampler import StandardSampler


def main(n_scenarios: int = 3):
    for seed in range(n_scenarios):
        rng = np.random.default_rng(seed)
        domain, scenario = road_problem(rng)
        sampler = StandardSampler(domain)
        res = ga_run(sampler, RoadCostEstimator(scenario, domain), Variation(domain, sampler),
                     GAConfig(population_size=20, generations=200), rng)
        road = res.best.structure[0].points
        ours = road_cost(road, scenario.wells, scenario.r_road)
        base = road_cost(through_wells_baseline(scenario), scenario.wells, scenario.r_road)
        print(f"scenario {seed}: {len(domain.prohibited)} obstacles, "
              f"GA road {ours:,.0f} vs through-wells {base:,.0f} ({100 * (1 - ours / base):+.1f}%)")


if __name__ == "__main__":
    main()
