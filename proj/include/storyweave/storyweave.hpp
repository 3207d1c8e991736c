#pragma once

// Everything except the HTTP binding (annotation_http.hpp), which needs
// cpp-httplib on the include path.

#include "storyweave/common.hpp"
#include "storyweave/story_model.hpp"
#include "storyweave/text_retrieval.hpp"
#include "storyweave/image_io.hpp"
#include "storyweave/visual_features.hpp"
#include "storyweave/illustrators.hpp"
#include "storyweave/transition_engine.hpp"
#include "storyweave/quality_metric.hpp"
#include "storyweave/synthetic.hpp"
#include "storyweave/benchmark_harness.hpp"
#include "storyweave/annotation_service.hpp"
