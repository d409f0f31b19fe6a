#pragma once

#include "wtplogit/error.hpp"
#include "wtplogit/choice_data.hpp"
#include "wtplogit/model_spec.hpp"
#include "wtplogit/draws.hpp"
#include "wtplogit/likelihood.hpp"
#include "wtplogit/optimizer.hpp"
#include "wtplogit/estimation.hpp"
#include "wtplogit/inference.hpp"
#include "wtplogit/predict.hpp"
#include "wtplogit/artifact.hpp"
#include "wtplogit/report.hpp"
