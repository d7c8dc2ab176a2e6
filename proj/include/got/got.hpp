#pragma once

// Everything except image file I/O (got/io.hpp, which needs OpenCV).

#include "got/budget.hpp"
#include "got/config.hpp"
#include "got/dcf.hpp"
#include "got/eval.hpp"
#include "got/features.hpp"
#include "got/fusion.hpp"
#include "got/gbdt.hpp"
#include "got/geometry.hpp"
#include "got/handcrafted.hpp"
#include "got/heatmap.hpp"
#include "got/image.hpp"
#include "got/motion.hpp"
#include "got/superpixel.hpp"
#include "got/synth.hpp"
#include "got/tracker.hpp"
