#pragma once

#include "pvc/frame.hpp"

namespace pvc {

// Smooth moving-gradient test pattern: a static diagonal ramp plus drifting
// sinusoids in all three planes. Motion phase advances by 2*pi/period per
// frame, so frame t+period equals frame t and clips loop seamlessly.
Sequence make_moving_gradient_clip(int width, int height, int frames, uint64_t seed,
                                   int period = 16);

// Cyclic extension of a clip (frames[i % clip length]), exact bytes.
Sequence loop_sequence(const Sequence& clip, int total_frames);

}  // namespace pvc
