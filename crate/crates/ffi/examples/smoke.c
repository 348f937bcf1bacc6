/* Links against libsemiquantum_ffi and checks a few known values. */
#include <math.h>
#include <stdio.h>

#include "semiquantum.h"

static int fail(const char *what, SqStatus s) {
    const char *msg = sq_last_error_message();
    fprintf(stderr, "%s: status %d: %s\n", what, (int)s, msg ? msg : "(none)");
    return 1;
}

int main(void) {
    SqMoments m;
    SqStatus s = sq_vacuum_moments(sqrt(2.0), 0.0, 1.0, &m);
    if (s != SQ_STATUS_OK) return fail("vacuum_moments", s);

    SqBasis cdms = {sqrt(2.0), 0.25, 0.0};
    double n;
    s = sq_quanta_expectation(&m, &cdms, 1.0, &n);
    if (s != SQ_STATUS_OK) return fail("quanta_expectation", s);
    if (fabs(n - 0.0078125) > 1e-15) {
        fprintf(stderr, "N_cdms = %.17g\n", n);
        return 1;
    }

    if (sq_vacuum_moments(-1.0, 0.0, 1.0, &m) != SQ_STATUS_DOMAIN) return 1;

    SqScenario *sc = NULL;
    s = sq_scenario_bundled("vacuum-kick", &sc);
    if (s != SQ_STATUS_OK) return fail("scenario_bundled", s);
    sq_scenario_set_t_end(sc, 5.0);
    SqTrajectory *tr = NULL;
    s = sq_integrate(sc, &tr);
    if (s != SQ_STATUS_OK) return fail("integrate", s);

    SqTermination term;
    sq_trajectory_status(tr, &term);
    size_t len = sq_trajectory_len(tr);
    SqRecord first, last;
    sq_trajectory_record(tr, 0, &first);
    sq_trajectory_record(tr, len - 1, &last);
    printf("semiquantum %s: %zu rows, status %d, N_cdms(0) = %.7f, t_end = %g, dEtot = %.2e\n",
           sq_version(), len, (int)term, first.n_cdms, last.t, fabs(last.etot - first.etot) / first.etot);

    int ok = term == SQ_TERMINATION_COMPLETED && len == 501 && fabs(first.n_cdms - 0.0078125) < 1e-12 &&
             last.t == 5.0 && sq_trajectory_record(tr, len, &last) == SQ_STATUS_OUT_OF_RANGE;
    sq_trajectory_free(tr);
    sq_scenario_free(sc);
    return ok ? 0 : 1;
}
