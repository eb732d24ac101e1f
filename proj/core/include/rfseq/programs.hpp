#pragma once

#include "rfseq/backend_sim.hpp"
#include "rfseq/components.hpp"
#include "rfseq/schedule.hpp"

namespace rfseq::programs {

// Quantizes starts and durations to the converter clocks (round half to even),
// synthesizes envelopes at the DAC rate and opens one acquisition window per
// readout at the ADC rate. Throws CompileError on post-quantization overlap,
// flux pulses without a qubit flux line, and multiplexed readouts closer than
// 1/window in frequency.
Schedule compile(const ExperimentRequest& request, const sim::BoardProfile& profile);

// Pure rewrite of the swept fields; `request` is left untouched.
ExperimentRequest apply_assignment(ExperimentRequest request, const Assignment& assignment);

// Schedule for `updated` (== apply_assignment(base_request, assignment)) built
// from the already compiled `base`, touching only the events the assignment
// names. Envelopes are re-synthesized only for amplitude/duration changes.
Schedule rebind(const Schedule& base, const ExperimentRequest& updated,
                const Assignment& assignment, const sim::BoardProfile& profile);

// Fixed sequence; reps * soft_avgs shots integrated per acquisition window.
AcquisitionResult execute_sequence(const Schedule& schedule, const Config& cfg,
                                   sim::Backend& backend);

// Demodulated window time series averaged over all shots.
AcquisitionResult execute_raw(const Schedule& schedule, const Config& cfg,
                              sim::Backend& backend);

// Real-time sweeps: one program load, every grid point executed in order.
AcquisitionResult execute_sweeps(const ExperimentRequest& request, const Schedule& schedule,
                                 sim::Backend& backend);

}  // namespace rfseq::programs
