// Benchmarks the OpenMP Gram/SDS assembly against the serial reference
// implementations on synthetic data and verifies bit-identical output.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ckl/dataset.hpp"
#include "ckl/kernels.hpp"
#include "ckl/sds.hpp"

using namespace ckl;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
double time_call(Fn&& fn, SymmetricMatrix& out) {
    auto t0 = std::chrono::steady_clock::now();
    out = fn();
    return seconds_since(t0);
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
                serial_s / parallel_s, identical ? "outputs identical" : "OUTPUTS DIFFER");
}

} // namespace

int main(int argc, char** argv) {
    int n_events = 4000;
    int n_instances = 600;
    if (argc > 1) n_events = std::stoi(argv[1]);
    if (argc > 2) n_instances = std::stoi(argv[2]);

#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both columns run serial code\n");
#endif

    SynthConfig sc;
    sc.n_drugs = 120;
    sc.n_events = n_events;
    sc.risky_drug_fraction = 0.15;
    sc.mean_order = 4.0;
    sc.seed = 7;
    SynthResult synth = synth_generate(sc);

    std::vector<ComboStats> stats = mine(synth.events);
    std::vector<DrugCombination> instances;
    for (const ComboStats& s : stats) {
        instances.push_back(s.combination);
        if (static_cast<int>(instances.size()) >= n_instances) break;
    }
    std::printf("events: %d, drugs: %d, gram instances: %zu\n\n", sc.n_events, sc.n_drugs,
                instances.size());
    std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

    SymmetricMatrix serial_m, parallel_m;

    double ts = time_call([&] { return sds_matrix_cm_serial(synth.events, sc.n_drugs); }, serial_m);
    double tp = time_call([&] { return sds_matrix_cm(synth.events, sc.n_drugs); }, parallel_m);
    report("sds_cm assembly", ts, tp, serial_m == parallel_m);
    SymmetricMatrix sds = parallel_m;

    KernelSpec gm{KernelFamily::GM, SdsKind::SDS_CM};
    ts = time_call([&] { return similarity_matrix_serial(instances, gm, &sds); }, serial_m);
    tp = time_call([&] { return similarity_matrix(instances, gm, &sds); }, parallel_m);
    report("gm gram (lsap per pair)", ts, tp, serial_m == parallel_m);

    KernelSpec cd2{KernelFamily::CD2, SdsKind::NONE};
    ts = time_call([&] { return similarity_matrix_serial(instances, cd2, nullptr); }, serial_m);
    tp = time_call([&] { return similarity_matrix(instances, cd2, nullptr); }, parallel_m);
    report("cd2 gram", ts, tp, serial_m == parallel_m);

    KernelSpec ds{KernelFamily::DS, SdsKind::SDS_CM};
    ts = time_call([&] { return similarity_matrix_serial(instances, ds, &sds); }, serial_m);
    tp = time_call([&] { return similarity_matrix(instances, ds, &sds); }, parallel_m);
    report("ds gram", ts, tp, serial_m == parallel_m);

    KernelSpec pb{KernelFamily::PB, SdsKind::SDS_CM};
    SymmetricMatrix sds_psd = psd_repair(sds).values;
    ts = time_call([&] { return similarity_matrix_serial(instances, pb, &sds_psd); }, serial_m);
    tp = time_call([&] { return similarity_matrix(instances, pb, &sds_psd); }, parallel_m);
    report("pb gram", ts, tp, serial_m == parallel_m);

    return 0;
}
