#pragma once

// Umbrella header for the polydet toolkit.

#include "polydet/augmentation.hpp"
#include "polydet/cli.hpp"
#include "polydet/config.hpp"
#include "polydet/dataset.hpp"
#include "polydet/detections_io.hpp"
#include "polydet/detection.hpp"
#include "polydet/detector.hpp"
#include "polydet/error.hpp"
#include "polydet/evaluation.hpp"
#include "polydet/frame.hpp"
#include "polydet/geometry.hpp"
#include "polydet/image.hpp"
#include "polydet/model_io.hpp"
#include "polydet/parallel.hpp"
#include "polydet/png_io.hpp"
#include "polydet/post_learning.hpp"
#include "polydet/proposal.hpp"
#include "polydet/report_io.hpp"
#include "polydet/version.hpp"
