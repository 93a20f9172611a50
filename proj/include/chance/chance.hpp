#pragma once

#include "chance/choice_model.hpp"
#include "chance/consistency.hpp"
#include "chance/delimited.hpp"
#include "chance/elicitation.hpp"
#include "chance/estimation.hpp"
#include "chance/session_io.hpp"
#include "chance/simulator.hpp"
#include "chance/utility_forms.hpp"
