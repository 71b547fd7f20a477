#pragma once

// Shared elitist generational kernel over integer-vector genomes
// (permutations with delimiters, assignment vectors). Deterministic under a
// fixed seed; objectives are lexicographic tuples, minimized.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "evackit/common.hpp"

namespace evackit::evo {

using Genome = std::vector<int>;
using Fitness = std::vector<double>;  // compared lexicographically, lower is better
using Rng = std::mt19937_64;

struct EvoConfig {
    std::size_t population_size = 64;
    std::size_t generations = 500;
    double crossover_rate = 0.9;
    double mutation_rate = 0.2;
    std::size_t elitism_count = 2;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (population_size < 2)
            throw ValidationError("population_size must be >= 2");
        if (generations < 1)
            throw ValidationError("generations must be >= 1");
        if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1)
            throw ValidationError("rates must be in [0, 1]");
        if (elitism_count < 1 || elitism_count >= population_size)
            throw ValidationError("elitism_count must be in [1, population_size)");
    }
};

struct EvoResult {
    Genome best;
    Fitness best_fitness;
    std::vector<Fitness> history;  // best fitness per generation, nonincreasing
};

using FitnessFn = std::function<Fitness(const Genome&)>;
using CrossoverFn = std::function<Genome(const Genome&, const Genome&, Rng&)>;
using MutateFn = std::function<void(Genome&, Rng&)>;

// --- stock operators ------------------------------------------------------

/// Order crossover for permutation genomes: copies a slice of `a`, fills the
/// rest in `b`'s order.
inline Genome order_crossover(const Genome& a, const Genome& b, Rng& rng) {
    const std::size_t n = a.size();
    if (n < 2)
        return a;
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    std::size_t lo = dist(rng), hi = dist(rng);
    if (lo > hi)
        std::swap(lo, hi);
    Genome child(n, -1);
    std::vector<bool> used(n, false);
    for (std::size_t i = lo; i <= hi; ++i) {
        child[i] = a[i];
    }
    auto taken = [&](int v) {
        for (std::size_t i = lo; i <= hi; ++i)
            if (child[i] == v)
                return true;
        return false;
    };
    std::size_t pos = (hi + 1) % n;
    for (std::size_t k = 0; k < n; ++k) {
        int v = b[(hi + 1 + k) % n];
        if (taken(v))
            continue;
        child[pos] = v;
        pos = (pos + 1) % n;
    }
    return child;
}

/// Per-gene uniform crossover for assignment-vector genomes.
inline Genome uniform_crossover(const Genome& a, const Genome& b, Rng& rng) {
    Genome child(a.size());
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < a.size(); ++i)
        child[i] = coin(rng) ? a[i] : b[i];
    return child;
}

inline void swap_mutation(Genome& g, Rng& rng) {
    if (g.size() < 2)
        return;
    std::uniform_int_distribution<std::size_t> dist(0, g.size() - 1);
    std::swap(g[dist(rng)], g[dist(rng)]);
}

inline void insert_mutation(Genome& g, Rng& rng) {
    if (g.size() < 2)
        return;
    std::uniform_int_distribution<std::size_t> dist(0, g.size() - 1);
    std::size_t from = dist(rng), to = dist(rng);
    int v = g[from];
    g.erase(g.begin() + from);
    g.insert(g.begin() + to, v);
}

/// Resets one gene to a value in [0, max_value]; for assignment vectors.
inline MutateFn make_reset_mutation(int max_value) {
    return [max_value](Genome& g, Rng& rng) {
        if (g.empty())
            return;
        std::uniform_int_distribution<std::size_t> pos(0, g.size() - 1);
        std::uniform_int_distribution<int> val(0, max_value);
        g[pos(rng)] = val(rng);
    };
}

// --- kernel ---------------------------------------------------------------

inline EvoResult evolve(const EvoConfig& config, const std::vector<Genome>& seeds,
                        const FitnessFn& fitness, const CrossoverFn& crossover,
                        const MutateFn& mutate) {
    config.validate();
    if (seeds.empty())
        throw ValidationError("evolve requires at least one seed candidate");

    Rng rng(config.rng_seed);

    struct Individual {
        Genome genome;
        Fitness fit;
    };
    auto less = [](const Individual& x, const Individual& y) {
        if (x.fit != y.fit)
            return x.fit < y.fit;
        return x.genome < y.genome;  // deterministic tie-break
    };

    std::vector<Individual> pop;
    pop.reserve(config.population_size);
    for (std::size_t i = 0; i < config.population_size; ++i) {
        Genome g = seeds[i % seeds.size()];
        if (i >= seeds.size() && config.mutation_rate > 0)
            mutate(g, rng);
        pop.push_back({std::move(g), {}});
    }
    for (auto& ind : pop)
        ind.fit = fitness(ind.genome);
    std::sort(pop.begin(), pop.end(), less);

    EvoResult result;
    result.best = pop.front().genome;
    result.best_fitness = pop.front().fit;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, config.population_size - 1);
    auto tournament = [&]() -> const Individual& {
        const Individual& a = pop[pick(rng)];
        const Individual& b = pop[pick(rng)];
        return less(a, b) ? a : b;
    };

    for (std::size_t gen = 0; gen < config.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(config.population_size);
        for (std::size_t i = 0; i < config.elitism_count; ++i)
            next.push_back(pop[i]);
        while (next.size() < config.population_size) {
            Genome child;
            if (unit(rng) < config.crossover_rate)
                child = crossover(tournament().genome, tournament().genome, rng);
            else
                child = tournament().genome;
            if (unit(rng) < config.mutation_rate)
                mutate(child, rng);
            next.push_back({std::move(child), {}});
        }
        for (auto& ind : next)
            ind.fit = fitness(ind.genome);
        std::sort(next.begin(), next.end(), less);
        pop = std::move(next);

        if (pop.front().fit < result.best_fitness) {
            result.best = pop.front().genome;
            result.best_fitness = pop.front().fit;
        }
        result.history.push_back(result.best_fitness);
    }
    return result;
}

}  // namespace evackit::evo
